#include "reld/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "reld/errors.hpp"

namespace reld::fft {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<complex> scratch_in(static_cast<std::size_t>(rows) * cols);
    std::vector<complex> scratch_out(scratch_in.size());
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                      reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

Grid transform(const Grid& x, int sign) {
  if (x.rows <= 0 || x.cols <= 0) throw ShapeError("FFT of an empty grid");
  Grid out(x.rows, x.cols);
  fftw_plan plan = cache().get(x.rows, x.cols, sign);
  // The new-array execute never writes the input when out-of-place.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<complex*>(x.values.data())),
                   reinterpret_cast<fftw_complex*>(out.values.data()));
  return out;
}

}  // namespace

Grid forward(const Grid& x) { return transform(x, FFTW_FORWARD); }

Grid inverse(const Grid& x) {
  Grid out = transform(x, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(x.rows) * x.cols);
  for (auto& v : out.values) v *= scale;
  return out;
}

Grid forward_real(const std::vector<double>& plane, int rows, int cols) {
  Grid g(rows, cols);
  if (plane.size() != g.values.size()) throw ShapeError("FFT plane length mismatch");
  for (std::size_t i = 0; i < plane.size(); ++i) g.values[i] = plane[i];
  return forward(g);
}

std::vector<double> inverse_real(const Grid& spectrum) {
  const Grid g = inverse(spectrum);
  std::vector<double> out(g.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.values[i].real();
  return out;
}

}  // namespace reld::fft
