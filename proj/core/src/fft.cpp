#include "modwave/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace modwave {

namespace {

enum class Kind { forward, backward, forward_inplace, backward_inplace, r2c, c2r };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Kind kind, int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // ESTIMATE keeps plans deterministic from run to run.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<cplx> a(n), b(n);
    std::vector<double> r(n);
    auto* ca = reinterpret_cast<fftw_complex*>(a.data());
    auto* cb = reinterpret_cast<fftw_complex*>(b.data());
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::forward: plan = fftw_plan_dft_1d(n, ca, cb, FFTW_FORWARD, flags); break;
      case Kind::backward: plan = fftw_plan_dft_1d(n, ca, cb, FFTW_BACKWARD, flags); break;
      case Kind::forward_inplace: plan = fftw_plan_dft_1d(n, ca, ca, FFTW_FORWARD, flags); break;
      case Kind::backward_inplace: plan = fftw_plan_dft_1d(n, ca, ca, FFTW_BACKWARD, flags); break;
      case Kind::r2c: plan = fftw_plan_dft_r2c_1d(n, r.data(), ca, flags); break;
      case Kind::c2r: plan = fftw_plan_dft_c2r_1d(n, ca, r.data(), flags); break;
    }
    if (!plan) throw InvalidParameter("FFTW could not create a plan of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<Kind, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

CVec fft(const CVec& in) {
  const int n = static_cast<int>(in.size());
  CVec src = in;
  CVec out(n);
  fftw_execute_dft(cache().get(Kind::forward, n), as_fftw(src.data()), as_fftw(out.data()));
  return out;
}

CVec ifft(const CVec& in) {
  const int n = static_cast<int>(in.size());
  CVec src = in;
  CVec out(n);
  fftw_execute_dft(cache().get(Kind::backward, n), as_fftw(src.data()), as_fftw(out.data()));
  return out / static_cast<double>(n);
}

void fft_inplace(cplx* data, int n, bool inverse) {
  auto plan = cache().get(inverse ? Kind::backward_inplace : Kind::forward_inplace, n);
  fftw_execute_dft(plan, as_fftw(data), as_fftw(data));
}

void rfft(const double* in, cplx* out, int n) {
  fftw_execute_dft_r2c(cache().get(Kind::r2c, n), const_cast<double*>(in), as_fftw(out));
}

void irfft(const cplx* in, double* out, int n) {
  fftw_execute_dft_c2r(cache().get(Kind::c2r, n), as_fftw(const_cast<cplx*>(in)), out);
}

CVec rfft(const Vec& in) {
  const int n = static_cast<int>(in.size());
  Vec src = in;
  CVec out(n / 2 + 1);
  rfft(src.data(), out.data(), n);
  return out;
}

Vec irfft(const CVec& in, int n) {
  CVec src = in;
  Vec out(n);
  irfft(src.data(), out.data(), n);
  return out / static_cast<double>(n);
}

}  // namespace modwave
