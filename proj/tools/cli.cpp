#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#if defined(__unix__) || defined(__APPLE__)
#define IRDS_HAVE_FIFOS 1
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#endif

#include "irds/docstore.hpp"
#include "irds/fetch.hpp"
#include "irds/formats.hpp"
#include "irds/slicing.hpp"

namespace irds::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::string> home;
  bool accept_licenses = false;
  bool quiet = false;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  Registry registry;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// False once the consumer has gone away (closed pipe); callers stop quietly.
bool emit(std::ostream& out, const Record& record, OutputFormat format) {
  auto line = serialize(record, format);
  line.push_back('\n');
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  return static_cast<bool>(out);
}

std::optional<OutputFormat> choose_format(const std::optional<std::string>& name, EntityType type,
                                          std::ostream& err) {
  if (!name) return default_format(type);
  auto fmt = parse_output_format(*name);
  if (!fmt) {
    err << "error: unknown format '" << *name << "' (expected tsv, jsonl or trec)\n";
    return std::nullopt;
  }
  if (*fmt == OutputFormat::trec && type != EntityType::qrels && type != EntityType::scoreddocs) {
    err << "error: trec format is only defined for qrels and scoreddocs\n";
    return std::nullopt;
  }
  return fmt;
}

int cmd_export(Context& ctx, const std::string& dataset, const std::string& entity,
               const std::optional<std::string>& format, const std::optional<std::string>& fields,
               const std::optional<std::string>& slice) {
  const auto type = parse_entity_type(entity);
  if (!type) {
    ctx.err << "error: unknown entity type '" << entity << "'\n";
    return exit_unsupported;
  }
  const auto handle = ctx.registry.load(dataset);
  if (!handle.has(*type)) {
    ctx.err << "error: dataset '" << dataset << "' does not provide " << to_string(*type)
            << " (available: " << capabilities_csv(handle.capabilities()) << ")\n";
    return exit_unsupported;
  }
  const auto fmt = choose_format(format, *type, ctx.err);
  if (!fmt) return exit_failure;

  std::vector<std::string> names;
  if (fields) {
    names = split_csv(*fields);
    handle.schema(*type)->project(names);
  }
  std::optional<SliceExpr> expr;
  if (slice) {
    if (*type != EntityType::docs) {
      throw Error(ErrorKind::invalid_slice, "--slice applies to docs only");
    }
    expr = SliceExpr::parse(*slice);
  }

  RecordStream stream = expr ? handle.docs_view().slice(*expr).open() : handle.iter(*type);
  while (auto record = stream.next()) {
    const bool ok = names.empty() ? emit(ctx.out, *record, *fmt)
                                  : emit(ctx.out, project(*record, names), *fmt);
    if (!ok) return exit_ok;
  }
  ctx.out.flush();
  return exit_ok;
}

int cmd_lookup(Context& ctx, const std::string& dataset, const std::vector<std::string>& ids,
               const std::optional<std::string>& format) {
  const auto handle = ctx.registry.load(dataset);
  if (!handle.has(EntityType::docs)) {
    ctx.err << "error: dataset '" << dataset << "' does not provide docs\n";
    return exit_unsupported;
  }
  const auto fmt = choose_format(format, EntityType::docs, ctx.err);
  if (!fmt) return exit_failure;

  const auto store = handle.docs_store();
  std::set<std::string> found;
  auto stream = store->get_many_iter(ids);
  bool writing = true;
  while (auto record = stream.next()) {
    found.insert(record->id());
    if (writing) writing = emit(ctx.out, *record, *fmt);
  }
  ctx.out.flush();
  std::set<std::string> reported;
  for (const auto& id : ids) {
    if (!found.count(id) && reported.insert(id).second) ctx.err << "NOT FOUND: " << id << '\n';
  }
  return found.empty() && !ids.empty() ? exit_all_missing : exit_ok;
}

int cmd_list(Context& ctx, bool downloadable_only) {
  for (const auto& info : ctx.registry.list_datasets()) {
    if (downloadable_only && !info.downloadable) continue;
    ctx.out << info.id << '\t' << capabilities_csv(info.capabilities) << '\t'
            << (info.downloadable ? "auto" : "manual") << '\n';
  }
  ctx.out.flush();
  return exit_ok;
}

int cmd_verify(Context& ctx, const std::string& dataset, bool deep) {
  const auto handle = ctx.registry.load(dataset);
  const auto specs = handle.downloads();
  for (const auto& spec : specs) {
    if (!spec.url) ctx.out << "manual\t" << spec.dest.generic_string() << '\n';
  }
  const auto report = check_links(specs, ctx.registry.environment().fetch, deep);
  bool unreachable = false;
  for (const auto& check : report.checks) {
    ctx.out << (check.ok() ? "ok" : "FAIL") << '\t' << check.dest.generic_string() << '\t'
            << check.url;
    if (!check.ok()) ctx.out << '\t' << check.error;
    ctx.out << '\n';
    if (!check.reachable) unreachable = true;
  }
  ctx.out.flush();
  if (report.ok()) return exit_ok;
  return unreachable ? exit_network : exit_hash_mismatch;
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

std::string dataset_page(const DatasetHandle& h) {
  std::ostringstream md;
  md << "# " << h.id() << "\n\n" << h.metadata().description << "\n\n";
  md << "- Acquisition: " << (h.metadata().downloadable ? "automatic" : "manual") << '\n';
  md << "- Entities: " << capabilities_csv(h.capabilities()) << "\n";
  for (const auto& [type, provider] : h.providers()) {
    md << "\n## " << to_string(type) << "\n\n";
    if (provider.count_hint) md << "Records: " << *provider.count_hint << "\n\n";
    md << "| Field | Kind |\n|---|---|\n";
    for (const auto& f : provider.schema->fields()) {
      md << "| " << f.name << " | " << to_string(f.kind) << " |\n";
    }
    for (const auto& s : provider.sources) {
      md << "\nSource: `" << s.dest.generic_string() << "`";
      if (!s.url) md << " (manual: " << md_escape(s.manual_instructions.value_or("")) << ")";
      md << '\n';
    }
  }
  if (h.metadata().license_note) md << "\n## License\n\n" << *h.metadata().license_note << '\n';
  if (!h.metadata().citation.empty()) {
    md << "\n## Citation\n\nIf you use this dataset, please cite: " << h.metadata().citation
       << '\n';
  }
  return md.str();
}

int cmd_catalog(Context& ctx, const fs::path& out_dir) {
  std::ostringstream index;
  index << "# Dataset catalog\n\n"
        << "| Dataset | Entities | Acquisition | Description |\n"
        << "|---|---|---|---|\n";
  std::vector<std::pair<fs::path, std::string>> pages;
  for (const auto& id : ctx.registry.ids()) {
    const auto h = ctx.registry.load(id);
    index << "| [" << id << "](" << id << ".md) | " << capabilities_csv(h.capabilities()) << " | "
          << (h.metadata().downloadable ? "auto" : "manual") << " | "
          << md_escape(h.metadata().description) << " |\n";
    pages.emplace_back(out_dir / (id + ".md"), dataset_page(h));
  }
  pages.emplace_back(out_dir / "index.md", index.str());
  try {
    for (const auto& [path, text] : pages) {
      fs::create_directories(path.parent_path());
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      f << text;
      if (!f) throw Error(ErrorKind::storage_error, "cannot write " + path.string());
    }
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::storage_error, e.what());
  }
  if (!ctx.registry.environment().fetch.log) return exit_ok;
  ctx.err << "wrote " << pages.size() << " files to " << out_dir.string() << '\n';
  return exit_ok;
}

#ifdef IRDS_HAVE_FIFOS
void drain_to_fifo(DocsView view, const fs::path& fifo) {
  const int fd = ::open(fifo.c_str(), O_WRONLY);
  if (fd < 0) return;
  auto stream = view.open();
  bool open = true;
  while (open) {
    auto record = stream.next();
    if (!record) break;
    auto line = serialize(*record, OutputFormat::jsonl);
    line.push_back('\n');
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd, line.data() + done, line.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        open = false;
        break;
      }
      done += static_cast<std::size_t>(n);
    }
  }
  ::close(fd);
}
#endif

int cmd_doc_fifos(Context& ctx, const std::string& dataset, unsigned count,
                  const std::optional<std::string>& dir_opt) {
#ifndef IRDS_HAVE_FIFOS
  (void)dataset;
  (void)count;
  (void)dir_opt;
  ctx.err << "error: doc_fifos requires named pipes (POSIX only)\n";
  return exit_unsupported_platform;
#else
  if (count == 0) throw Error(ErrorKind::invalid_slice, "--count must be positive");
  const auto handle = ctx.registry.load(dataset);
  if (!handle.has(EntityType::docs)) {
    ctx.err << "error: dataset '" << dataset << "' does not provide docs\n";
    return exit_unsupported;
  }
  const auto view = handle.docs_view();

  fs::path dir;
  bool own_dir = false;
  if (dir_opt) {
    dir = *dir_opt;
    fs::create_directories(dir);
  } else {
    std::string tmpl = (fs::temp_directory_path() / "irds-fifos-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) {
      throw Error(ErrorKind::storage_error, std::string("mkdtemp failed: ") + std::strerror(errno));
    }
    dir = tmpl;
    own_dir = true;
  }
  std::vector<fs::path> fifos;
  for (unsigned i = 0; i < count; ++i) {
    auto p = dir / ("docs-" + std::to_string(i) + ".jsonl");
    std::error_code ec;
    fs::remove(p, ec);
    if (::mkfifo(p.c_str(), 0600) != 0) {
      throw Error(ErrorKind::storage_error,
                  "mkfifo " + p.string() + " failed: " + std::strerror(errno));
    }
    fifos.push_back(std::move(p));
  }

  ctx.out << "# Documents of " << dataset << " are streamed as JSON lines through " << count
          << " FIFO(s) in " << dir.string() << ":\n";
  for (const auto& f : fifos) ctx.out << "#   " << f.string() << '\n';
  ctx.out << "# To index with Anserini, run:\n"
          << "bin/run.sh io.anserini.index.IndexCollection -collection JsonCollection"
          << " -generator DefaultLuceneDocumentGenerator -input " << dir.string()
          << " -index indexes/" << fs::path(dataset).filename().string() << " -threads " << count
          << " -storePositions -storeDocvectors -storeRaw\n";
  ctx.out.flush();

  std::vector<std::thread> writers;
  for (unsigned i = 0; i < count; ++i) {
    writers.emplace_back(drain_to_fifo, partition(view, count, i), fifos[i]);
  }
  for (auto& t : writers) t.join();

  std::error_code ec;
  for (const auto& f : fifos) fs::remove(f, ec);
  if (own_dir) fs::remove(dir, ec);
  return exit_ok;
#endif
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unknown_dataset:
      return exit_unknown_dataset;
    case ErrorKind::unsupported_entity:
    case ErrorKind::manual_file_required:
    case ErrorKind::license_not_accepted:
      return exit_unsupported;
    case ErrorKind::unknown_field:
    case ErrorKind::invalid_slice:
      return exit_bad_arguments;
    case ErrorKind::unsupported_platform:
      return exit_unsupported_platform;
    case ErrorKind::hash_mismatch:
      return exit_hash_mismatch;
    case ErrorKind::network_error:
      return exit_network;
    default:
      return exit_failure;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RegistryFactory& make_registry) {
  CLI::App app{"Acquire, inspect and export information retrieval datasets.", "ir_datasets"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "ir_datasets (irdatakit) 0.1.0");

  Globals g;
  app.add_option("--home", g.home, "Data directory (overrides IRDS_HOME)");
  app.add_flag("--accept-licenses", g.accept_licenses,
               "Accept dataset license notices without prompting");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::string dataset;
  std::string entity;
  std::optional<std::string> format;
  std::optional<std::string> fields;
  std::optional<std::string> slice;
  std::vector<std::string> ids;
  bool downloadable = false;
  bool deep = false;
  std::string out_dir;
  unsigned fifo_count = 1;
  std::optional<std::string> fifo_dir;

  auto* exp = app.add_subcommand("export", "Stream one entity type of a dataset to stdout");
  exp->add_option("dataset", dataset, "Dataset id, e.g. msmarco-passage/train")->required();
  exp->add_option("entity", entity, "docs, queries, qrels, scoreddocs or docpairs")->required();
  exp->add_option("--format", format, "tsv, jsonl or trec");
  exp->add_option("--fields", fields, "Comma-separated fields to keep, in order");
  exp->add_option("--slice", slice, "start:stop[:step] over docs; bounds may be fractions");

  auto* look = app.add_subcommand("lookup", "Print documents by id");
  look->add_option("dataset", dataset, "Dataset id")->required();
  look->add_option("ids", ids, "Document ids")->required();
  look->add_option("--format", format, "tsv or jsonl");

  auto* list = app.add_subcommand("list", "List registered datasets");
  list->add_flag("--downloadable", downloadable, "Only datasets that download automatically");

  auto* ver = app.add_subcommand("verify", "Check that a dataset's source files are reachable");
  ver->add_option("dataset", dataset, "Dataset id")->required();
  ver->add_flag("--deep", deep, "Download every file and compare hashes");

  auto* cat = app.add_subcommand("catalog", "Write a markdown catalog of all datasets");
  cat->add_option("--out", out_dir, "Output directory")->required();

  auto* fifo = app.add_subcommand("doc_fifos", "Export docs in parallel through named pipes");
  fifo->add_option("dataset", dataset, "Dataset id")->required();
  fifo->add_option("--count", fifo_count, "Number of FIFOs")->check(CLI::PositiveNumber);
  fifo->add_option("--dir", fifo_dir, "Directory for the FIFOs (default: a fresh temp dir)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_failure;
  }

  try {
    auto env = Environment::from_env(g.home ? std::optional<fs::path>(*g.home) : std::nullopt);
    env.fetch.accept_licenses = g.accept_licenses;
    env.fetch.log = g.quiet ? nullptr : &err;
    Context ctx{out, err, make_registry(env)};

    if (exp->parsed()) return cmd_export(ctx, dataset, entity, format, fields, slice);
    if (look->parsed()) return cmd_lookup(ctx, dataset, ids, format);
    if (list->parsed()) return cmd_list(ctx, downloadable);
    if (ver->parsed()) return cmd_verify(ctx, dataset, deep);
    if (cat->parsed()) return cmd_catalog(ctx, out_dir);
    if (fifo->parsed()) return cmd_doc_fifos(ctx, dataset, fifo_count, fifo_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_failure;
}

}  // namespace irds::cli
