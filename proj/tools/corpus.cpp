// Writes the synthetic host designs used by the examples and acceptance runs.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tjgen/error.hpp"
#include "tjgen/generate.hpp"

namespace {

struct Entry {
  const char* name;
  int gates;
  double dff_fraction;
  std::uint64_t seed;
};

constexpr Entry kCorpus[] = {
    {"syn300", 300, 0.0, 1}, {"syn800", 800, 0.0, 2},  {"syn1500", 1500, 0.0, 3},
    {"seq400", 400, 0.05, 4}, {"seq800", 800, 0.05, 5},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic netlist corpus"};
  std::string out_dir = "corpus";
  app.add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    for (const Entry& e : kCorpus) {
      tjgen::GeneratorParams p;
      p.name = e.name;
      p.gates = e.gates;
      p.inputs = e.gates / 10;
      p.dff_fraction = e.dff_fraction;
      p.seed = e.seed;
      const tjgen::Netlist n = tjgen::generate_netlist(p);
      const auto path = std::filesystem::path(out_dir) / (std::string(e.name) + ".v");
      std::ofstream(path, std::ios::binary) << tjgen::emit_netlist(n);
      manifest.push_back({{"name", e.name},
                          {"file", path.filename().string()},
                          {"gates", p.gates},
                          {"inputs", p.inputs},
                          {"dff_fraction", p.dff_fraction},
                          {"max_fanin", p.max_fanin},
                          {"locality", p.locality},
                          {"window", p.window},
                          {"seed", p.seed}});
      std::cout << path.string() << ": " << n.cells().size() << " cells, " << n.nets().size() << " nets\n";
    }
    std::ofstream(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
