#include "p2c/data.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "p2c/rng.hpp"

namespace p2c {

std::string split_name(Split s) {
  switch (s) {
    case Split::trainA: return "trainA";
    case Split::trainB: return "trainB";
    case Split::testA: return "testA";
    case Split::testB: return "testB";
  }
  return "?";
}

namespace {

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

DomainFolder load_domain(const std::filesystem::path& root, Split split) {
  DomainFolder f;
  f.split = split;
  f.root = root / split_name(split);
  if (!std::filesystem::is_directory(f.root))
    fail("data", "missing or empty domain '" + split_name(split) + "' under " + root.string());
  for (const auto& entry : std::filesystem::directory_iterator(f.root)) {
    if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
    f.records.push_back({entry.path().filename().string(), entry.path()});
  }
  if (f.records.empty())
    fail("data", "missing or empty domain '" + split_name(split) + "' under " + root.string());
  std::sort(f.records.begin(), f.records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < f.records.size(); ++i)
    check(f.records[i].id != f.records[i - 1].id, "data",
          "duplicate id '" + f.records[i].id + "' in " + split_name(split));
  // eager decode validation: a malformed tree should fail at load, not mid-run
  for (const ImageRecord& rec : f.records) {
    cv::Mat m = cv::imread(rec.path.string(), cv::IMREAD_COLOR);
    check(!m.empty(), "data", "undecodable image " + rec.path.string());
  }
  return f;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root) {
  check(std::filesystem::is_directory(root), "data", "dataset root not found: " + root.string());
  Dataset ds;
  ds.root = root;
  ds.train_a = load_domain(root, Split::trainA);
  ds.train_b = load_domain(root, Split::trainB);
  ds.test_a = load_domain(root, Split::testA);
  ds.test_b = load_domain(root, Split::testB);
  return ds;
}

Tensor4 load_image_raw(const std::filesystem::path& file, int resolution) {
  check(resolution >= 1, "usage", "resolution must be positive");
  cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
  check(!bgr.empty(), "data", "undecodable image " + file.string());
  cv::Mat bgr64;
  bgr.convertTo(bgr64, CV_64FC3);
  if (bgr64.rows != resolution || bgr64.cols != resolution) {
    cv::Mat resized;
    cv::resize(bgr64, resized, cv::Size(resolution, resolution), 0, 0, cv::INTER_LINEAR);
    bgr64 = resized;
  }
  Shape4 shape{1, 3, resolution, resolution};
  std::vector<double> data(shape.numel());
  const std::size_t plane = std::size_t(resolution) * resolution;
  for (int y = 0; y < resolution; ++y) {
    const cv::Vec3d* row = bgr64.ptr<cv::Vec3d>(y);
    for (int x = 0; x < resolution; ++x) {
      const std::size_t i = std::size_t(y) * resolution + x;
      data[0 * plane + i] = row[x][2];  // R (file is BGR)
      data[1 * plane + i] = row[x][1];
      data[2 * plane + i] = row[x][0];
    }
  }
  return Tensor4::from_data(shape, std::move(data));
}

Tensor4 normalize_to_unit(const Tensor4& raw) {
  check(raw.defined(), "shape", "normalize_to_unit: undefined input");
  std::vector<double> out(raw.numel());
  const std::vector<double>& in = raw.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] / 127.5 - 1.0;
  return Tensor4::from_data(raw.shape(), std::move(out));
}

Tensor4 preprocess(const std::filesystem::path& file, int resolution) {
  return normalize_to_unit(load_image_raw(file, resolution));
}

namespace {

// (n,3,h,w) tensor -> interleaved BGR CV_64FC3, first sample only
cv::Mat to_bgr_mat(const Tensor4& img) {
  const Shape4& s = img.shape();
  check(s.c == 3, "shape", "expected a 3-channel image, got " + s.str());
  cv::Mat m(s.h, s.w, CV_64FC3);
  const double* d = img.data().data();
  const std::size_t plane = std::size_t(s.h) * s.w;
  for (int y = 0; y < s.h; ++y) {
    cv::Vec3d* row = m.ptr<cv::Vec3d>(y);
    for (int x = 0; x < s.w; ++x) {
      const std::size_t i = std::size_t(y) * s.w + x;
      row[x] = cv::Vec3d(d[2 * plane + i], d[1 * plane + i], d[0 * plane + i]);
    }
  }
  return m;
}

}  // namespace

Tensor4 resize_bilinear(const Tensor4& img, int out_h, int out_w) {
  const Shape4& s = img.shape();
  check(s.n == 1 && s.c == 3, "shape", "resize_bilinear expects (1,3,h,w), got " + s.str());
  if (s.h == out_h && s.w == out_w) return img;
  cv::Mat m = to_bgr_mat(img);
  cv::Mat r;
  cv::resize(m, r, cv::Size(out_w, out_h), 0, 0, cv::INTER_LINEAR);
  Shape4 os{1, 3, out_h, out_w};
  std::vector<double> data(os.numel());
  const std::size_t plane = std::size_t(out_h) * out_w;
  for (int y = 0; y < out_h; ++y) {
    const cv::Vec3d* row = r.ptr<cv::Vec3d>(y);
    for (int x = 0; x < out_w; ++x) {
      const std::size_t i = std::size_t(y) * out_w + x;
      data[0 * plane + i] = row[x][2];
      data[1 * plane + i] = row[x][1];
      data[2 * plane + i] = row[x][0];
    }
  }
  return Tensor4::from_data(os, std::move(data));
}

std::vector<std::size_t> epoch_order(std::size_t count, uint64_t seed, uint64_t epoch,
                                     uint64_t domain_tag) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch, domain_tag));
  rng.shuffle(order);
  return order;
}

std::size_t DomainCursor::next(std::size_t count) {
  check(count > 0, "data", "sampling from an empty domain");
  const uint64_t epoch = draws / count;
  const std::size_t pos = draws % count;
  if (epoch != cached_epoch_ || cached_order_.size() != count) {
    cached_order_ = epoch_order(count, seed, epoch, tag);
    cached_epoch_ = epoch;
  }
  ++draws;
  return cached_order_[pos];
}

RawBatch sample_unpaired_raw(const DomainFolder& a, const DomainFolder& b, int n, int resolution,
                             DomainCursor& ca, DomainCursor& cb) {
  check(n >= 1, "usage", "batch size must be positive");
  check(!a.records.empty() && !b.records.empty(), "data", "sampling from an empty domain");
  Shape4 shape{n, 3, resolution, resolution};
  RawBatch batch;
  std::vector<double> xd(shape.numel()), yd(shape.numel());
  const std::size_t img_elems = std::size_t(3) * resolution * resolution;
  for (int i = 0; i < n; ++i) {
    const ImageRecord& ra = a.records[ca.next(a.records.size())];
    const ImageRecord& rb = b.records[cb.next(b.records.size())];
    Tensor4 ia = load_image_raw(ra.path, resolution);
    Tensor4 ib = load_image_raw(rb.path, resolution);
    std::copy(ia.data().begin(), ia.data().end(), xd.begin() + std::ptrdiff_t(i * img_elems));
    std::copy(ib.data().begin(), ib.data().end(), yd.begin() + std::ptrdiff_t(i * img_elems));
    batch.x_ids.push_back(ra.id);
    batch.y_ids.push_back(rb.id);
  }
  batch.x = Tensor4::from_data(shape, std::move(xd));
  batch.y = Tensor4::from_data(shape, std::move(yd));
  return batch;
}

UnpairedBatch sample_unpaired_batch(const DomainFolder& a, const DomainFolder& b, int n,
                                    int resolution, DomainCursor& ca, DomainCursor& cb) {
  RawBatch raw = sample_unpaired_raw(a, b, n, resolution, ca, cb);
  UnpairedBatch batch;
  batch.x = normalize_to_unit(raw.x);
  batch.y = normalize_to_unit(raw.y);
  batch.x_ids = std::move(raw.x_ids);
  batch.y_ids = std::move(raw.y_ids);
  return batch;
}

namespace {

// [-1,1] -> [0,255] u8, rounding half away from zero, clamped
cv::Mat to_u8_bgr(const Tensor4& img) {
  const Shape4& s = img.shape();
  check(s.n == 1 && s.c == 3, "shape", "export expects (1,3,h,w), got " + s.str());
  cv::Mat m(s.h, s.w, CV_8UC3);
  const double* d = img.data().data();
  const std::size_t plane = std::size_t(s.h) * s.w;
  auto to_byte = [](double v) {
    long r = std::lround((v + 1.0) * 127.5);
    return uchar(std::clamp(r, 0l, 255l));
  };
  for (int y = 0; y < s.h; ++y) {
    cv::Vec3b* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < s.w; ++x) {
      const std::size_t i = std::size_t(y) * s.w + x;
      row[x] = cv::Vec3b(to_byte(d[2 * plane + i]), to_byte(d[1 * plane + i]),
                         to_byte(d[0 * plane + i]));
    }
  }
  return m;
}

void write_png(const cv::Mat& m, const std::filesystem::path& path) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), m);
  } catch (const cv::Exception&) {
    ok = false;
  }
  check(ok, "io", "cannot write image " + path.string());
}

cv::Mat assemble_grid(const std::vector<Tensor4>& images, int columns, int label_band) {
  check(!images.empty(), "usage", "empty image list for grid export");
  check(columns >= 1, "usage", "grid needs at least one column");
  const Shape4& s0 = images.front().shape();
  for (const Tensor4& t : images)
    check(t.shape() == s0, "shape",
          "grid images must share one shape; got " + t.shape().str() + " vs " + s0.str());
  const int rows = int((images.size() + columns - 1) / columns);
  cv::Mat canvas(rows * s0.h + label_band, columns * s0.w, CV_8UC3,
                 cv::Scalar(255, 255, 255));
  for (std::size_t i = 0; i < images.size(); ++i) {
    cv::Mat tile = to_u8_bgr(images[i]);
    const int r = int(i) / columns, c = int(i) % columns;
    tile.copyTo(canvas(cv::Rect(c * s0.w, label_band + r * s0.h, s0.w, s0.h)));
  }
  return canvas;
}

}  // namespace

void export_image(const Tensor4& img, const std::filesystem::path& path) {
  write_png(to_u8_bgr(img), path);
}

void export_grid(const std::vector<Tensor4>& images, int columns,
                 const std::filesystem::path& path) {
  write_png(assemble_grid(images, columns, 0), path);
}

void export_labeled_grid(const std::vector<Tensor4>& images, int columns,
                         const std::vector<std::string>& column_labels,
                         const std::filesystem::path& path) {
  check(column_labels.size() == std::size_t(columns), "usage",
        "need one label per grid column");
  const int band = 18;
  cv::Mat canvas = assemble_grid(images, columns, band);
  const int tile_w = canvas.cols / columns;
  for (int c = 0; c < columns; ++c)
    cv::putText(canvas, column_labels[c], cv::Point(c * tile_w + 3, band - 5),
                cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  write_png(canvas, path);
}

}  // namespace p2c
