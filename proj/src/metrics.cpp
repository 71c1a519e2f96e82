#include <cmath>
#include <limits>

#include "gatlas/error.hpp"
#include "gatlas/render.hpp"

namespace gatlas::render {

namespace {

void check_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw Error(ErrorKind::validation, "image dimensions differ");
  }
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b);
  if (a.data.empty()) throw Error(ErrorKind::validation, "empty images");
  double sse = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) {
    const double d = static_cast<double>(a.data[k]) - b.data[k];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b);
  if (a.width < kWindow || a.height < kWindow) {
    throw Error(ErrorKind::validation, "SSIM needs images of at least 11x11 pixels");
  }
  const auto w = gaussian_window();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const int out_w = a.width - kWindow + 1;
  const int out_h = a.height - kWindow + 1;
  const auto idx = [](int x, int y, int width) { return static_cast<std::size_t>(y) * width + x; };

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    // Separable filtering of the five moment images, valid region only.
    std::array<std::vector<double>, 5> horiz;
    for (auto& h : horiz) h.assign(static_cast<std::size_t>(out_w) * a.height, 0.0);
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int k = 0; k < kWindow; ++k) {
          const double va = a.at(x + k, y, c);
          const double vb = b.at(x + k, y, c);
          m[0] += w[k] * va;
          m[1] += w[k] * vb;
          m[2] += w[k] * va * va;
          m[3] += w[k] * vb * vb;
          m[4] += w[k] * va * vb;
        }
        for (int q = 0; q < 5; ++q) horiz[q][idx(x, y, out_w)] = m[q];
      }
    }
    double channel_sum = 0.0;
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int k = 0; k < kWindow; ++k) {
          for (int q = 0; q < 5; ++q) m[q] += w[k] * horiz[q][idx(x, y + k, out_w)];
        }
        const double var_a = m[2] - m[0] * m[0];
        const double var_b = m[3] - m[1] * m[1];
        const double cov = m[4] - m[0] * m[1];
        channel_sum += ((2.0 * m[0] * m[1] + c1) * (2.0 * cov + c2)) /
                       ((m[0] * m[0] + m[1] * m[1] + c1) * (var_a + var_b + c2));
      }
    }
    total += channel_sum / (static_cast<double>(out_w) * out_h);
  }
  return total / a.channels;
}

}  // namespace gatlas::render
