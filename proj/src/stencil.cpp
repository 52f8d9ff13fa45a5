#include "cqm/stencil.hpp"

#include "cqm/errors.hpp"

namespace cqm {

namespace {
constexpr std::array<double, 1> kFirst2{0.5};
constexpr std::array<double, 2> kFirst4{2.0 / 3.0, -1.0 / 12.0};
constexpr std::array<double, 3> kFirst6{3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
constexpr std::array<double, 4> kFirst8{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr std::array<double, 1> kSecond2{1.0};
constexpr std::array<double, 2> kSecond4{4.0 / 3.0, -1.0 / 12.0};
constexpr std::array<double, 3> kSecond6{3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
constexpr std::array<double, 4> kSecond8{8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
}  // namespace

CentralStencil CentralStencil::of_order(int order) {
  switch (order) {
    case 2: return {2, kFirst2, -2.0, kSecond2};
    case 4: return {4, kFirst4, -5.0 / 2.0, kSecond4};
    case 6: return {6, kFirst6, -49.0 / 18.0, kSecond6};
    case 8: return {8, kFirst8, -205.0 / 72.0, kSecond8};
    default: throw DomainError("stencil order must be 2, 4, 6 or 8");
  }
}

}  // namespace cqm
