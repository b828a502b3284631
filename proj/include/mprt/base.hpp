#pragma once

// Shared basics: error taxonomy, a 2-vector, and a deterministic parallel_for.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mprt {

// Error taxonomy. The CLI maps input-side errors (validation, model, data,
// domain) to exit code 2 and solver-side errors (iteration, numerical) to 3.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct validation_error : error {
  using error::error;
};
struct model_error : error {
  using error::error;
};
struct data_error : error {
  using error::error;
};
struct domain_error : error {
  using error::error;
};
struct iteration_error : error {
  using error::error;
};
struct numerical_error : error {
  using error::error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw validation_error(msg);
}

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Global worker count, set once by the CLI --threads flag. Parallel regions
// only ever fill independent output slots, so results are identical for any
// thread count.
inline int& thread_count() {
  static int n = 1;
  return n;
}

template <class F>
void parallel_for(int n, F&& body) {
  int workers = thread_count();
  if (workers <= 1 || n < 2 * workers) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mprt
