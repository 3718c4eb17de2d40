#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "teamrace/json_io.hpp"
#include "teamrace/race_harness.hpp"

// Times the serial reference tournament loop against the OpenMP worker pool
// and checks that both produce identical per-race trace hashes.

namespace {

using namespace teamrace;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tournament throughput benchmark: serial reference vs OpenMP pool"};
  std::string track_path, vehicle_path;
  std::string team_a = "pursuit", team_b = "pursuit";
  int races = 6, jobs = 2;
  std::uint64_t seed = 7;
  app.add_option("--track", track_path, "track spec JSON")->required();
  app.add_option("--vehicle", vehicle_path, "vehicle params JSON")->required();
  app.add_option("--team-a", team_a, "controller kind for team A");
  app.add_option("--team-b", team_b, "controller kind for team B");
  app.add_option("--races", races, "races per pairing (multiple of 6)");
  app.add_option("--jobs", jobs, "workers for the parallel run");
  app.add_option("--seed", seed, "base seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const TrackSpec track_spec = load_track_spec(track_path);
    const VehicleParams vehicle = load_vehicle_params(vehicle_path);
    const RaceSetup setup = make_race_setup(track_spec, vehicle, {});

    TournamentPairing pairing;
    pairing.name = team_a + "_vs_" + team_b;
    pairing.team_a.kind = controller_kind_from_string(team_a);
    pairing.team_b.kind = controller_kind_from_string(team_b);
    const RaceParams base;

    auto t0 = Clock::now();
    const TournamentResult serial =
        run_tournament_serial(setup, {pairing}, races, seed, base);
    const double serial_s = seconds_since(t0);

    t0 = Clock::now();
    const TournamentResult parallel =
        run_tournament(setup, {pairing}, races, seed, base, jobs);
    const double parallel_s = seconds_since(t0);

    bool identical = serial.rows.size() == parallel.rows.size();
    for (std::size_t i = 0; identical && i < serial.rows.size(); ++i) {
      identical = serial.rows[i].result.trace_hash == parallel.rows[i].result.trace_hash &&
                  serial.rows[i].result.seed == parallel.rows[i].result.seed;
    }

    std::printf("races: %d (%s)\n", races, pairing.name.c_str());
    std::printf("serial reference: %.3f s  (%.3f s/race)\n", serial_s, serial_s / races);
    std::printf("parallel x%d:      %.3f s  (%.3f s/race)  speedup %.2f\n", jobs, parallel_s,
                parallel_s / races, serial_s / parallel_s);
    std::printf("trace hashes %s\n", identical ? "identical" : "DIFFER");
    return identical ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
