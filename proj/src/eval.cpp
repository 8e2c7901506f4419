#include "p2c/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "p2c/common.hpp"

namespace p2c {

namespace {

std::vector<double> checked_probabilities(const ClassifierHead& clf, const Tensor4& img,
                                          std::size_t index) {
  std::vector<double> p = clf.probabilities(img, index);
  check(p.size() == std::size_t(clf.num_classes), "numeric",
        "classifier returned " + std::to_string(p.size()) + " probabilities for " +
            std::to_string(clf.num_classes) + " classes");
  double sum = 0.0;
  for (double v : p) {
    check(std::isfinite(v) && v >= 0.0, "numeric", "classifier returned a bad probability");
    sum += v;
  }
  check(std::fabs(sum - 1.0) <= 1e-6, "numeric", "classifier probabilities do not sum to 1");
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

std::pair<double, double> inception_score(const ClassifierHead& clf,
                                          const std::vector<Tensor4>& images, int splits) {
  check(clf.num_classes >= 2, "usage", "score needs at least two classes");
  check(bool(clf.probabilities), "usage", "classifier has no probability function");
  check(splits >= 1, "usage", "score needs at least one split");
  check(images.size() >= std::size_t(splits), "usage",
        "fewer images than splits: " + std::to_string(images.size()) + " < " +
            std::to_string(splits));

  const std::size_t n = images.size();
  const int c = clf.num_classes;
  std::vector<std::vector<double>> p;
  p.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.push_back(checked_probabilities(clf, images[i], i));

  const std::size_t q = n / std::size_t(splits);
  const std::size_t r = n % std::size_t(splits);
  std::vector<double> scores;
  std::size_t lo = 0;
  for (int k = 0; k < splits; ++k) {
    const std::size_t len = q + (std::size_t(k) < r ? 1 : 0);
    const std::size_t hi = lo + len;
    std::vector<double> marginal(c, 0.0);
    for (std::size_t i = lo; i < hi; ++i)
      for (int j = 0; j < c; ++j) marginal[j] += p[i][j];
    for (int j = 0; j < c; ++j) marginal[j] /= double(len);

    double mean_kl = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      double kl = 0.0;
      for (int j = 0; j < c; ++j)
        if (p[i][j] > 0.0) kl += p[i][j] * std::log(p[i][j] / marginal[j]);
      mean_kl += kl;
    }
    mean_kl /= double(len);
    scores.push_back(std::exp(mean_kl));
    lo = hi;
  }

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= double(splits);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= double(splits);
  return {mean, std::sqrt(var)};
}

std::string ScoreReport::to_json() const {
  auto fd = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto esc = [](const std::string& s) {
    std::string out;
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out;
  };
  std::string j = "{\n";
  j += "  \"metric\": \"" + esc(metric) + "\",\n";
  j += "  \"mean\": " + fd(mean) + ",\n";
  j += "  \"stddev\": " + fd(stddev) + ",\n";
  j += "  \"n_images\": " + std::to_string(n_images) + ",\n";
  j += "  \"splits\": " + std::to_string(splits) + ",\n";
  j += "  \"classifier_id\": \"" + esc(classifier_id) + "\",\n";
  j += "  \"warning\": \"" + esc(warning) + "\"\n";
  j += "}\n";
  return j;
}

ScoreReport score_images(const ClassifierHead& clf, const std::vector<Tensor4>& images,
                         int splits) {
  auto [mean, sd] = inception_score(clf, images, splits);
  ScoreReport r;
  r.mean = mean;
  r.stddev = sd;
  r.n_images = int(images.size());
  r.splits = splits;
  r.classifier_id = clf.id;
  r.warning = "scored with stand-in classifier '" + clf.id +
              "'; not comparable to numbers from a large pretrained classifier";
  return r;
}

ClassifierHead uniform_classifier(int classes) {
  check(classes >= 2, "usage", "uniform classifier needs at least two classes");
  ClassifierHead h;
  h.id = "uniform stub (" + std::to_string(classes) + " classes)";
  h.num_classes = classes;
  h.probabilities = [classes](const Tensor4&, std::size_t) {
    return std::vector<double>(classes, 1.0 / double(classes));
  };
  return h;
}

ClassifierHead round_robin_onehot_classifier(int classes) {
  check(classes >= 2, "usage", "one-hot classifier needs at least two classes");
  ClassifierHead h;
  h.id = "round-robin one-hot stub (" + std::to_string(classes) + " classes)";
  h.num_classes = classes;
  h.probabilities = [classes](const Tensor4&, std::size_t index) {
    std::vector<double> p(classes, 0.0);
    p[index % std::size_t(classes)] = 1.0;
    return p;
  };
  return h;
}

ClassifierHead desk_classifier(const Dataset& ds, uint64_t seed, int steps, int resolution,
                               int base_channels) {
  PerceptionConfig cfg;
  cfg.base_channels = base_channels;
  check(resolution >= (1 << cfg.layers), "config",
        "desk classifier resolution too small for its layer count");
  auto clf = std::make_shared<DeskClassifier>(
      train_desk_classifier(ds, cfg, seed, steps, resolution));
  clf->trunk.freeze();

  ClassifierHead h;
  h.id = "desk-trained A/B domain classifier on " + ds.root.string() + " (seed " +
         std::to_string(seed) + ", " + std::to_string(steps) + " steps)";
  h.num_classes = 2;
  h.resolution = resolution;
  h.probabilities = [clf](const Tensor4& img, std::size_t) {
    NoGradGuard ng;
    Tensor4 x = img;
    if (x.shape().h != clf->resolution || x.shape().w != clf->resolution)
      x = resize_bilinear(x, clf->resolution, clf->resolution);
    Tensor4 logits = mean_spatial(clf->head(clf->trunk.features(x).back()));
    check(logits.shape() == Shape4{1, 2, 1, 1}, "shape", "desk classifier wants one image at a time");
    const double a = logits.data()[0], b = logits.data()[1];
    const double m = std::max(a, b);
    const double ea = std::exp(a - m), eb = std::exp(b - m);
    return std::vector<double>{ea / (ea + eb), eb / (ea + eb)};
  };
  return h;
}

PatchResponseSummary patch_response_stats(const PatchDiscriminator& d,
                                          const std::vector<Tensor4>& real,
                                          const std::vector<Tensor4>& fake) {
  check(d.defined(), "usage", "patch_response_stats needs a constructed discriminator");
  auto eval_set = [&](const std::vector<Tensor4>& imgs) {
    check(!imgs.empty(), "usage", "patch_response_stats needs at least one image per set");
    NoGradGuard ng;
    const int g = d.patch_grid();
    PatchResponseStats st;
    st.cell_mean = Tensor4::zeros({1, 1, g, g});
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0, samples = 0;
    for (const Tensor4& img : imgs) {
      Tensor4 r = d(img);
      const Shape4& s = r.shape();
      samples += std::size_t(s.n);
      for (int n = 0; n < s.n; ++n)
        for (int h = 0; h < g; ++h)
          for (int w = 0; w < g; ++w) {
            const double v = r.at(n, 0, h, w);
            sum += v;
            sumsq += v * v;
            st.cell_mean.at(0, 0, h, w) += v;
            ++count;
          }
    }
    st.mean = sum / double(count);
    st.variance = std::max(0.0, sumsq / double(count) - st.mean * st.mean);
    for (double& v : st.cell_mean.data()) v /= double(samples);
    return st;
  };
  PatchResponseSummary out;
  out.real = eval_set(real);
  out.fake = eval_set(fake);
  return out;
}

}  // namespace p2c
