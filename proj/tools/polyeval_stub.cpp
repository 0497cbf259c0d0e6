// Standalone deterministic model server for offline runs and demos.
#include <CLI11.hpp>

#include <iostream>

#include "polyeval/error.hpp"
#include "polyeval/stub_server.hpp"

int main(int argc, char** argv) {
  using namespace polyeval::inference;
  CLI::App app{"Deterministic model server speaking the polyeval wire protocol", "polyeval-stub"};
  int port = 8000;
  std::string toy = "echo";
  std::string nll = "uniform";
  std::string translate = "identity";
  app.add_option("--port", port, "Port on 127.0.0.1 (0 picks one)");
  app.add_option("--toy", toy, "echo | uniform:V | fixed:<json object of choice logits>");
  app.add_option("--nll", nll, "uniform or bigram")->check(CLI::IsMember({"uniform", "bigram"}));
  app.add_option("--translate", translate, "identity or tagged")->check(CLI::IsMember({"identity", "tagged"}));
  CLI11_PARSE(app, argc, argv);

  StubOptions opts;
  opts.nll_mode = nll == "bigram" ? NllMode::Bigram : NllMode::Uniform;
  opts.translate_mode = translate == "tagged" ? TranslateMode::Tagged : TranslateMode::Identity;
  try {
    if (toy.rfind("uniform:", 0) == 0) {
      opts.vocab = std::stoul(toy.substr(8));
      if (opts.vocab < 2) throw std::invalid_argument("V must be at least 2");
    } else if (toy.rfind("fixed:", 0) == 0) {
      opts.fixed_logits = nlohmann::json::parse(toy.substr(6)).get<std::map<std::string, double>>();
    } else if (toy != "echo") {
      throw std::invalid_argument("unknown toy mode '" + toy + "'");
    }
    StubServer server(opts, port);
    std::cout << "listening on " << server.url() << std::endl;
    server.wait();
  } catch (const std::exception& e) {
    std::cerr << "polyeval-stub: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
