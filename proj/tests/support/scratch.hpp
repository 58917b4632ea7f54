#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <json.hpp>

namespace tesl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tesl_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << s;
}

inline const std::filesystem::path& data_dir() {
  static const std::filesystem::path d = TESL_DATA_DIR;
  return d;
}

// Base experiment config with absolute references into data/.
inline nlohmann::json base_config(const std::string& mode, std::uint64_t seed) {
  using nlohmann::json;
  return json{
      {"mode", mode},
      {"seed", seed},
      {"optics", {{"stack", (data_dir() / "cavity.stack").string()}, {"wavelength_nm", 1550}, {"absorber_layer", 1}}},
      {"daq", {{"sample_rate", 10e6}, {"noise_sigma", 6.0e-9}, {"chunk_duration", 1.0}}},
      {"pulsed", {{"rep_rate", 50e3}, {"pulse_width", 4e-9}, {"mean_photons", 1.5}, {"duration", 1.0}}},
      {"background", {{"rate_hz", 400}, {"energy_window_ev", {0.59, 1.01}}}},
      {"chain",
       {{"calibration_table", (data_dir() / "attenuators.csv").string()},
        {"fixed_losses",
         json::array({{{"label", "fusion splice"}, {"transmittance", 0.995}},
                      {{"label", "room-temperature fiber"}, {"transmittance", 0.977}}})},
        {"coupling", 0.99},
        {"bend_loss", false}}},
      {"shaper", {{"peaking_time", 2e-6}, {"stages", 4}}},
      {"spectro", {{"bin_width", 0.01}, {"range_ev", {-0.5, 4.5}}, {"n_peaks", 5}}},
  };
}

inline std::filesystem::path write_config(const ScratchDir& dir, const nlohmann::json& cfg,
                                          const std::string& name = "config.json") {
  const auto p = dir / name;
  write_text(p, cfg.dump(2));
  return p;
}

}  // namespace tesl::testing
