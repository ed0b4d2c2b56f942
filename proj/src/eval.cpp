#include "gdepth/eval.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "gdepth/kernels.hpp"

namespace gdepth {

namespace {

std::vector<uint8_t> joint_mask(const DepthMap& pred, const DepthMap& gt, const char* what) {
    if (pred.width() != gt.width() || pred.height() != gt.height())
        throw DimensionMismatchError(std::string(what) + ": prediction and ground truth differ in shape");
    std::vector<uint8_t> mask(pred.pixel_count());
    size_t n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        mask[i] = pred.valid_mask()[i] && gt.valid_mask()[i];
        n += mask[i];
    }
    if (n == 0) throw NoValidPixelsError(std::string(what) + ": no jointly valid pixels");
    return mask;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double abs_rel(const DepthMap& pred, const DepthMap& gt) {
    const std::vector<uint8_t> mask = joint_mask(pred, gt, "abs_rel");
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        acc += std::abs(pred.data()[i] - gt.data()[i]) / gt.data()[i];
        ++n;
    }
    return acc / static_cast<double>(n);
}

double delta1(const DepthMap& pred, const DepthMap& gt) {
    const std::vector<uint8_t> mask = joint_mask(pred, gt, "delta1");
    size_t hits = 0, n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double r = pred.data()[i] / gt.data()[i];
        if (std::max(r, 1.0 / r) < 1.25) ++hits;
        ++n;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double rmse(const DepthMap& pred, const DepthMap& gt) {
    const std::vector<uint8_t> mask = joint_mask(pred, gt, "rmse");
    double acc = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double d = pred.data()[i] - gt.data()[i];
        acc += d * d;
        ++n;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

AffineFit affine_align(const DepthMap& pred, const DepthMap& gt) {
    const std::vector<uint8_t> mask = joint_mask(pred, gt, "affine_align");
    const kernels::FitMoments m =
        kernels::masked_fit_moments(pred.data().data(), gt.data().data(), mask.data(), mask.size());
    if (m.count < 2) throw DegenerateFitError("affine_align: needs at least two jointly valid pixels");
    const double n = static_cast<double>(m.count);
    const double denom = n * m.sum_pp - m.sum_p * m.sum_p;  // n^2 * var(pred)
    if (!(denom > 1e-12 * n * m.sum_pp))
        throw DegenerateFitError("affine_align: prediction is constant over the valid pixels");
    const double a = (n * m.sum_pg - m.sum_p * m.sum_g) / denom;
    const double b = (m.sum_g - a * m.sum_p) / n;

    std::vector<double> values(pred.pixel_count(), 0.0);
    std::vector<uint8_t> valid(pred.pixel_count(), 0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (!pred.valid_mask()[i]) continue;
        const double v = a * pred.data()[i] + b;
        if (v > 0.0 && std::isfinite(v)) {
            values[i] = v;
            valid[i] = 1;
        }
    }
    return AffineFit{a, b, DepthMap(pred.width(), pred.height(), std::move(values), std::move(valid))};
}

double total_variation(const DepthMap& depth) {
    double acc_x = 0.0, acc_y = 0.0;
    size_t n_x = 0, n_y = 0;
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (!depth.valid_at(y, x)) continue;
            if (x + 1 < depth.width() && depth.valid_at(y, x + 1)) {
                acc_x += std::abs(depth.at(y, x + 1) - depth.at(y, x));
                ++n_x;
            }
            if (y + 1 < depth.height() && depth.valid_at(y + 1, x)) {
                acc_y += std::abs(depth.at(y + 1, x) - depth.at(y, x));
                ++n_y;
            }
        }
    }
    const double mean_x = n_x > 0 ? acc_x / static_cast<double>(n_x) : 0.0;
    const double mean_y = n_y > 0 ? acc_y / static_cast<double>(n_y) : 0.0;
    return mean_x + mean_y;
}

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, bool align) {
    const DepthMap* scored = &pred;
    AffineFit fit{1.0, 0.0, DepthMap(1, 1, 1.0)};
    if (align) {
        fit = affine_align(pred, gt);
        scored = &fit.aligned;
    }
    MetricReport r;
    r.abs_rel = abs_rel(*scored, gt);
    r.delta1 = delta1(*scored, gt);
    r.rmse = rmse(*scored, gt);
    const std::vector<uint8_t> mask = joint_mask(*scored, gt, "evaluate");
    r.n_pixels = 0;
    for (uint8_t m : mask) r.n_pixels += m;
    r.aligned = align;
    return r;
}

std::string report_block(const MetricReport& r) {
    std::string out;
    out += "abs_rel = " + format_double(r.abs_rel) + "\n";
    out += "delta1 = " + format_double(r.delta1) + "\n";
    out += "rmse = " + format_double(r.rmse) + "\n";
    out += "n_pixels = " + std::to_string(r.n_pixels) + "\n";
    out += std::string("aligned = ") + (r.aligned ? "true" : "false") + "\n";
    return out;
}

std::string report_record(const MetricReport& r, const std::string& label) {
    return label + " abs_rel=" + format_double(r.abs_rel) + " delta1=" + format_double(r.delta1) +
           " rmse=" + format_double(r.rmse) + " n_pixels=" + std::to_string(r.n_pixels) +
           " aligned=" + (r.aligned ? "1" : "0");
}

}  // namespace gdepth
