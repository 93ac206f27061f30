// Acceptance runner: one PASS/FAIL line per criterion; exit 0 only if all selected criteria pass.
#include <CLI11.hpp>

#include <cstdio>
#include <vector>

#include "floquet_ep/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = floquet_ep::acceptance;
  CLI::App app{"floquet-ep acceptance criteria"};
  std::string level = "full";
  std::vector<int> only;
  acc::Options opts;
  app.add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  app.add_option("--only", only, "run just these criterion ids")->check(CLI::Range(1, 12));
  app.add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--mutate-z-sign", opts.mutate_z_sign, "corrupt the Z-term sign on the analytic side (self-test)");
  CLI11_PARSE(app, argc, argv);

  opts.level = level == "fast" ? acc::Level::Fast : acc::Level::Full;
  const auto ids = only.empty() ? acc::criteria_for(opts.level) : only;
  int failed = 0;
  for (int id : ids) {
    const auto r = acc::run_criterion(id, opts);
    std::printf("%s\n", acc::format_line(r).c_str());
    std::fflush(stdout);
    failed += !r.passed;
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed ? 1 : 0;
}
