// Simulates five minutes of a sleeper breathing at 15 breaths per minute,
// runs the night processor on it and prints the per-second rate.
#include <iostream>

#include "csivitals/csivitals.hpp"

int main() {
  using namespace csivitals;
  synth::SleeperOptions opt;
  opt.rate_bpm = 15.0;
  opt.duration_s = 300.0;
  opt.seed = 7;
  const auto scene = synth::sleeper_scene(opt);

  Config cfg;
  cfg.noise_floor = 0.0;  // no empty-room calibration in this sample

  NightProcessor proc(cfg);
  synth::CfrGenerator gen(scene, opt.duration_s, cfg.stream.nominal_rate_hz, opt.seed);
  while (auto f = gen.next()) proc.push(*f);
  const NightResult night = proc.finish();

  for (const auto& b : night.bpm) {
    std::cout << b.t_s << "s ";
    if (b.bpm)
      std::cout << *b.bpm << " bpm\n";
    else
      std::cout << "-\n";
  }
  std::cout << night.events.size() << " motion events\n";
}
