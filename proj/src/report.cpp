#include <fstream>

#include <fmt/core.h>

#include "crowd/bench.hpp"
#include "crowd/errors.hpp"

namespace crowd {
namespace {

constexpr std::pair<ReportFormat, std::string_view> kFormats[] = {
    {ReportFormat::csv, "csv"},
    {ReportFormat::markdown, "markdown"},
    {ReportFormat::json, "json"},
    {ReportFormat::plot, "plot"},
};

std::string title(const std::string& method) {
  try {
    return std::string(display_name(method_from_string(method)));
  } catch (const std::invalid_argument&) {
    return method;
  }
}

void emit_csv(const ExperimentReport& r, std::ostream& out) {
  out << "method,lps,mean_error,sd_error,runs\n";
  for (const auto& c : r.cells) {
    out << fmt::format("{},{},{:.17g},{:.17g},{}\n", c.method, c.lps, c.mean, c.sd, c.errors.size());
  }
}

void emit_markdown(const ExperimentReport& r, std::ostream& out) {
  out << fmt::format("Errors (%) on {} (N={}, R={}, labels={}), mean of {} runs\n\n", r.dataset,
                     r.n_samples, r.n_workers, r.total_labels, r.runs);
  out << "| Method |";
  for (auto l : r.lps) out << fmt::format(" {} lps |", l);
  out << "\n|---|";
  for (std::size_t k = 0; k < r.lps.size(); ++k) out << "---:|";
  out << '\n';
  for (const auto& m : r.methods) {
    out << fmt::format("| {} |", title(m));
    for (auto l : r.lps) out << fmt::format(" {:.2f} |", 100.0 * r.cell(m, l).mean);
    out << '\n';
  }
}

void emit_plot(const ExperimentReport& r, std::ostream& out) {
  bool first = true;
  for (const auto& m : r.methods) {
    if (!first) out << "\n\n";
    first = false;
    out << fmt::format("# {}\n# lps mean_error sd_error\n", m);
    for (auto l : r.lps) {
      const auto& c = r.cell(m, l);
      out << fmt::format("{} {:.17g} {:.17g}\n", l, c.mean, c.sd);
    }
  }
}

}  // namespace

std::string_view to_string(ReportFormat format) {
  for (const auto& [f, name] : kFormats) {
    if (f == format) return name;
  }
  return "unknown";
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "md") return ReportFormat::markdown;
  for (const auto& [f, text] : kFormats) {
    if (text == name) return f;
  }
  throw std::invalid_argument(fmt::format("unknown report format '{}'", name));
}

std::string_view file_extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return ".csv";
    case ReportFormat::markdown: return ".md";
    case ReportFormat::json: return ".json";
    case ReportFormat::plot: return ".dat";
  }
  return "";
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"method", c.method},
                     {"lps", c.lps},
                     {"mean", c.mean},
                     {"sd", c.sd},
                     {"errors", c.errors}});
  }
  return {{"dataset", r.dataset},
          {"n_samples", r.n_samples},
          {"n_workers", r.n_workers},
          {"total_labels", r.total_labels},
          {"seed", r.seed},
          {"runs", r.runs},
          {"methods", r.methods},
          {"lps", r.lps},
          {"cells", cells}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.n_workers = j.at("n_workers").get<std::size_t>();
  r.total_labels = j.at("total_labels").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.runs = j.at("runs").get<std::size_t>();
  r.methods = j.at("methods").get<std::vector<std::string>>();
  r.lps = j.at("lps").get<std::vector<std::size_t>>();
  for (const auto& c : j.at("cells")) {
    r.cells.push_back({c.at("method").get<std::string>(), c.at("lps").get<std::size_t>(),
                       c.at("errors").get<std::vector<double>>(), c.at("mean").get<double>(),
                       c.at("sd").get<double>()});
  }
  return r;
}

ExperimentReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open report '{}'", path.string()));
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid report: {}", path.string(), e.what()));
  }
}

void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out) {
  if (report.cells.empty()) throw std::invalid_argument("emit_report: empty report");
  switch (format) {
    case ReportFormat::csv: emit_csv(report, out); break;
    case ReportFormat::markdown: emit_markdown(report, out); break;
    case ReportFormat::json: out << to_json(report).dump(2) << '\n'; break;
    case ReportFormat::plot: emit_plot(report, out); break;
  }
}

std::filesystem::path emit_report(const ExperimentReport& report, ReportFormat format,
                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto path = dir / (report.dataset + std::string(file_extension(format)));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  emit_report(report, format, out);
  if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
  return path;
}

}  // namespace crowd
