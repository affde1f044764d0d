#ifndef LISTEREO_COMMON_HPP_
#define LISTEREO_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace listereo {

// Error taxonomy. The CLI maps these onto process exit codes:
// ShapeError/ConfigError -> 1, NumericError -> 2, IoError -> 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

inline void check_shape(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}
inline void check_numeric(bool cond, const std::string& msg) {
  if (!cond) throw NumericError(msg);
}

// Rank-4 tensor shape, NCHW.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::int64_t count() const {
    return std::int64_t(n) * c * h * w;
  }
  std::int64_t index(int in, int ic, int iy, int ix) const {
    return ((std::int64_t(in) * c + ic) * h + iy) * w + ix;
  }
  bool operator==(const Shape& o) const = default;
  bool is_scalar() const { return n == 1 && c == 1 && h == 1 && w == 1; }
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

namespace threading {
// Thread cap from LISTEREO_THREADS (0/unset = hardware concurrency).
// Must run before the first BLAS call so OpenBLAS picks up the cap.
void init();
int max_threads();
}  // namespace threading

}  // namespace listereo

#endif  // LISTEREO_COMMON_HPP_
