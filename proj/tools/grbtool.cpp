#include <grb/cli.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream s;
  s << in.rdbuf();
  out = s.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Checks and constructions for graded bundles and weighted algebroids"};
  std::string format = "text", spec, out, command, sub;
  app.add_option("--format", format, "Report rendering")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--spec", spec, "Spec file")->required();
  app.add_option("--out", out, "Write the constructed document to this file");
  app.add_option("command", command,
                 "validate, linearise, dual, mironian, embed, check-q, bracket or construct; "
                 "defaults to the spec's task command");
  app.add_option("construction", sub, "For construct: tangent, cotangent, tk, lie-tower, prolong");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string text;
  if (!read_file(spec, text)) {
    std::cerr << spec << ": cannot read file\n";
    return 2;
  }
  try {
    grb::cli::SpecDocument doc = grb::cli::parse(text);
    if (command.empty()) command = doc.get("command").value_or("");
    if (command.empty()) throw grb::cli::UsageError("no command given and none in [task]");
    grb::cli::Report r = grb::cli::run(command, doc, sub);
    std::cout << (format == "json" ? grb::cli::render_json(r) : grb::cli::render_text(r));
    if (!out.empty()) {
      if (!r.output) throw grb::cli::UsageError(command + " produces no document");
      std::ofstream o(out, std::ios::binary);
      o << grb::cli::render(*r.output);
      if (!o) {
        std::cerr << out << ": cannot write file\n";
        return 2;
      }
    }
    return r.exit_code();
  } catch (const grb::cli::ParseError& e) {
    std::cerr << spec << ":" << e.what() << "\n";
    return 2;
  } catch (const grb::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
}
