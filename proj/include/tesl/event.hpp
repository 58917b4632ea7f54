#pragma once

#include <vector>

namespace tesl {

enum class Origin { Signal, Background };

struct PhotonEvent {
  double time = 0.0;    // s
  double energy = 0.0;  // eV
  Origin origin = Origin::Signal;

  friend bool operator==(const PhotonEvent&, const PhotonEvent&) = default;
};

using EventList = std::vector<PhotonEvent>;

}  // namespace tesl
