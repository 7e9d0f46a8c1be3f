#include "escgnn/io.hpp"

#include "escgnn/error.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace escgnn::io {

using nlohmann::json;

std::uint64_t Array::element_count() const {
  std::uint64_t c = 1;
  for (auto s : shape) c *= s;
  return c;
}

const Array* ArrayFile::find(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const Array& ArrayFile::get(std::string_view name) const {
  const Array* a = find(name);
  if (!a) throw Error(ErrorCode::FormatError, "missing array '" + std::string(name) + "'");
  return *a;
}

void ArrayFile::add_f64(std::string name, std::vector<std::uint64_t> shape, std::vector<double> data) {
  Array a;
  a.name = std::move(name);
  a.dtype = DType::F64;
  a.shape = std::move(shape);
  a.f64 = std::move(data);
  if (a.element_count() != a.f64.size()) throw Error(ErrorCode::ShapeMismatch, "array shape/data mismatch");
  arrays.push_back(std::move(a));
}

void ArrayFile::add_i32(std::string name, std::vector<std::uint64_t> shape, std::vector<std::int32_t> data) {
  Array a;
  a.name = std::move(name);
  a.dtype = DType::I32;
  a.shape = std::move(shape);
  a.i32 = std::move(data);
  if (a.element_count() != a.i32.size()) throw Error(ErrorCode::ShapeMismatch, "array shape/data mismatch");
  arrays.push_back(std::move(a));
}

void ArrayFile::add_text(std::string name, std::string_view text) {
  Array a;
  a.name = std::move(name);
  a.dtype = DType::U8;
  a.shape = {text.size()};
  a.u8.assign(text.begin(), text.end());
  arrays.push_back(std::move(a));
}

void ArrayFile::add_matrix(std::string name, const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data[i * m.cols() + j] = m(i, j);
  }
  add_f64(std::move(name), {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
          std::move(data));
}

Eigen::MatrixXd ArrayFile::matrix(std::string_view name) const {
  const Array& a = get(name);
  if (a.dtype != DType::F64 || a.shape.size() != 2) {
    throw Error(ErrorCode::FormatError, "array '" + std::string(name) + "' is not an f64 matrix");
  }
  Eigen::MatrixXd m(a.shape[0], a.shape[1]);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = a.f64[i * m.cols() + j];
  }
  return m;
}

std::string ArrayFile::text(std::string_view name) const {
  const Array& a = get(name);
  if (a.dtype != DType::U8) throw Error(ErrorCode::FormatError, "array '" + std::string(name) + "' is not text");
  return {a.u8.begin(), a.u8.end()};
}

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  void need(std::uint64_t n) const {
    if (n > b_.size() - pos_) throw Error(ErrorCode::FormatError, "truncated file");
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, b_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * s);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 8; ++s) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * s);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint64_t dtype_size(DType t) {
  switch (t) {
    case DType::F64: return 8;
    case DType::I32: return 4;
    case DType::U8: return 1;
  }
  return 0;
}

}  // namespace

std::vector<std::uint8_t> encode(const ArrayFile& file) {
  Writer w;
  w.bytes(file.magic.data(), file.magic.size());
  w.u32(file.version);
  w.u32(static_cast<std::uint32_t>(file.arrays.size()));
  for (const auto& a : file.arrays) {
    w.u32(static_cast<std::uint32_t>(a.name.size()));
    w.bytes(a.name.data(), a.name.size());
    w.u8(static_cast<std::uint8_t>(a.dtype));
    w.u8(0);
    w.u8(0);
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (auto s : a.shape) w.u64(s);
    switch (a.dtype) {
      case DType::F64:
        for (double v : a.f64) w.f64(v);
        break;
      case DType::I32:
        for (auto v : a.i32) w.i32(v);
        break;
      case DType::U8:
        w.bytes(a.u8.data(), a.u8.size());
        break;
    }
  }
  return w.take();
}

ArrayFile decode(std::span<const std::uint8_t> bytes, const Magic& expected) {
  Reader r(bytes);
  ArrayFile f;
  r.bytes(f.magic.data(), f.magic.size());
  if (f.magic != expected) {
    throw Error(ErrorCode::FormatError, "bad magic, expected " + std::string(expected.begin(), expected.end()));
  }
  f.version = r.u32();
  if (f.version != kFormatVersion) {
    throw Error(ErrorCode::FormatError, "unsupported format version " + std::to_string(f.version));
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    Array a;
    const std::uint32_t name_len = r.u32();
    r.need(name_len);
    a.name.resize(name_len);
    r.bytes(a.name.data(), name_len);
    const std::uint8_t dt = r.u8();
    if (dt > 2) throw Error(ErrorCode::FormatError, "unknown dtype in '" + a.name + "'");
    a.dtype = static_cast<DType>(dt);
    r.u8();
    r.u8();
    r.u8();
    const std::uint32_t ndim = r.u32();
    if (ndim > 8) throw Error(ErrorCode::FormatError, "too many dimensions in '" + a.name + "'");
    a.shape.resize(ndim);
    for (auto& s : a.shape) s = r.u64();
    const std::uint64_t count_el = a.element_count();
    if (count_el > bytes.size()) throw Error(ErrorCode::FormatError, "array '" + a.name + "' too large");
    r.need(count_el * dtype_size(a.dtype));
    switch (a.dtype) {
      case DType::F64:
        a.f64.resize(count_el);
        for (auto& v : a.f64) v = r.f64();
        break;
      case DType::I32:
        a.i32.resize(count_el);
        for (auto& v : a.i32) v = r.i32();
        break;
      case DType::U8:
        a.u8.resize(count_el);
        r.bytes(a.u8.data(), count_el);
        break;
    }
    f.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw Error(ErrorCode::FormatError, "trailing bytes after last array");
  return f;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) s[i] = digits[value & 0xf];
  return s;
}

namespace {

std::vector<std::int32_t> split_u64(std::uint64_t v) {
  return {static_cast<std::int32_t>(static_cast<std::uint32_t>(v >> 32)),
          static_cast<std::int32_t>(static_cast<std::uint32_t>(v))};
}

std::uint64_t join_u64(std::int32_t hi, std::int32_t lo) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(hi)) << 32) |
         static_cast<std::uint32_t>(lo);
}

std::vector<std::int32_t> to_i32(const std::vector<int>& v) { return {v.begin(), v.end()}; }
std::vector<int> from_i32(const std::vector<std::int32_t>& v) { return {v.begin(), v.end()}; }

std::vector<std::uint64_t> u64s(std::initializer_list<std::int64_t> dims) {
  std::vector<std::uint64_t> out;
  for (auto x : dims) out.push_back(static_cast<std::uint64_t>(x));
  return out;
}

void add_tensor(ArrayFile& f, std::string name, const Tensor3& t) {
  f.add_f64(std::move(name), u64s({t.dim0(), t.dim1(), t.dim2()}), t.data());
}

Tensor3 get_tensor(const ArrayFile& f, std::string_view name) {
  const Array& a = f.get(name);
  if (a.dtype != DType::F64 || a.shape.size() != 3) {
    throw Error(ErrorCode::FormatError, "array '" + std::string(name) + "' is not a rank-3 f64 tensor");
  }
  Tensor3 t(a.shape[0], a.shape[1], a.shape[2]);
  t.data() = a.f64;
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_record(const DatasetRecord& rec) {
  const GeometricGraph& g = rec.graph;
  ArrayFile f;
  f.magic = kRecordMagic;
  f.add_matrix("coords", g.coords);
  std::vector<std::int32_t> ptr{0}, idx;
  std::vector<double> wts;
  for (const auto& nbrs : g.adjacency) {
    for (const auto& nb : nbrs) {
      idx.push_back(nb.index);
      wts.push_back(nb.weight);
    }
    ptr.push_back(static_cast<std::int32_t>(idx.size()));
  }
  f.add_i32("adj_ptr", {ptr.size()}, ptr);
  f.add_i32("adj_index", {idx.size()}, idx);
  f.add_f64("adj_weight", {wts.size()}, wts);
  f.add_f64("epsilon", {g.epsilon ? 1u : 0u}, g.epsilon ? std::vector<double>{*g.epsilon} : std::vector<double>{});
  f.add_matrix("scalar_signals", g.scalar_signals);
  std::vector<double> vs;
  for (const auto& w : g.vector_signals) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) vs.push_back(w(i, c));
    }
  }
  f.add_f64("vector_signals", u64s({static_cast<std::int64_t>(g.vector_signals.size()), g.coords.rows(), g.coords.cols()}), vs);
  f.add_f64("graph_target", {rec.graph_target ? 1u : 0u},
            rec.graph_target ? std::vector<double>{*rec.graph_target} : std::vector<double>{});
  if (rec.node_targets) f.add_matrix("node_targets", *rec.node_targets);
  f.add_f64("provenance", {3}, {rec.provenance.a, rec.provenance.b, rec.provenance.c});
  auto seeds = split_u64(rec.provenance.seed);
  for (auto x : split_u64(rec.sample_seed)) seeds.push_back(x);
  f.add_i32("seeds", {4}, seeds);
  f.add_i32("split", {1}, {static_cast<std::int32_t>(rec.split)});
  return encode(f);
}

DatasetRecord decode_record(std::span<const std::uint8_t> bytes) {
  const ArrayFile f = decode(bytes, kRecordMagic);
  DatasetRecord rec;
  GeometricGraph& g = rec.graph;
  g.coords = f.matrix("coords");
  const int n = g.num_nodes();
  const auto& ptr = f.get("adj_ptr").i32;
  const auto& idx = f.get("adj_index").i32;
  const auto& wts = f.get("adj_weight").f64;
  if (static_cast<int>(ptr.size()) != n + 1 || idx.size() != wts.size() ||
      static_cast<std::size_t>(ptr.back()) != idx.size()) {
    throw Error(ErrorCode::FormatError, "inconsistent adjacency arrays");
  }
  g.adjacency.resize(n);
  for (int i = 0; i < n; ++i) {
    if (ptr[i] > ptr[i + 1]) throw Error(ErrorCode::FormatError, "adjacency pointers not monotone");
    for (int e = ptr[i]; e < ptr[i + 1]; ++e) {
      if (idx[e] < 0 || idx[e] >= n) throw Error(ErrorCode::FormatError, "neighbor index out of range");
      g.adjacency[i].push_back({idx[e], wts[e]});
    }
  }
  const auto& eps = f.get("epsilon").f64;
  if (!eps.empty()) g.epsilon = eps.front();
  g.scalar_signals = f.matrix("scalar_signals");
  const Array& vs = f.get("vector_signals");
  if (vs.shape.size() != 3) throw Error(ErrorCode::FormatError, "vector_signals must be rank 3");
  for (std::uint64_t k = 0; k < vs.shape[0]; ++k) {
    Eigen::MatrixXd w(vs.shape[1], vs.shape[2]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(i, c) = vs.f64[(k * vs.shape[1] + i) * vs.shape[2] + c];
      }
    }
    g.vector_signals.push_back(std::move(w));
  }
  const auto& gt = f.get("graph_target").f64;
  if (!gt.empty()) rec.graph_target = gt.front();
  if (f.find("node_targets")) rec.node_targets = f.matrix("node_targets");
  const auto& prov = f.get("provenance").f64;
  const auto& seeds = f.get("seeds").i32;
  if (prov.size() != 3 || seeds.size() != 4) throw Error(ErrorCode::FormatError, "bad provenance arrays");
  rec.provenance = {prov[0], prov[1], prov[2], join_u64(seeds[0], seeds[1])};
  rec.sample_seed = join_u64(seeds[2], seeds[3]);
  const auto& split = f.get("split").i32;
  if (split.size() != 1 || split[0] < 0 || split[0] > 2) throw Error(ErrorCode::FormatError, "bad split tag");
  rec.split = static_cast<SplitTag>(split[0]);
  return rec;
}

std::vector<std::uint8_t> encode_cache(const FeatureCache& c) {
  ArrayFile f;
  f.magic = kCacheMagic;
  f.add_i32("p_row_ptr", {c.p.row_ptr.size()}, to_i32(c.p.row_ptr));
  f.add_i32("p_col_idx", {c.p.col_idx.size()}, to_i32(c.p.col_idx));
  f.add_f64("p_values", {c.p.values.size()}, c.p.values);
  f.add_i32("p_info", {2}, {c.p.n, c.p.row_stochastic ? 1 : 0});
  if (c.frames) {
    const int n = c.frames->num_nodes();
    const int d = c.frames->d;
    std::vector<double> basis, sigma;
    std::vector<std::int32_t> signs, gap;
    for (const auto& fr : c.frames->frames) {
      for (int r = 0; r < d; ++r) {
        for (int k = 0; k < d; ++k) basis.push_back(fr.basis(r, k));
      }
      for (int k = 0; k < d; ++k) sigma.push_back(fr.singular_values[k]);
      for (auto s : fr.signs) signs.push_back(static_cast<std::int32_t>(s));
      gap.push_back(fr.gap_flagged ? 1 : 0);
    }
    f.add_f64("frame_basis", u64s({n, d, d}), basis);
    f.add_f64("frame_sigma", u64s({n, d}), sigma);
    f.add_i32("frame_signs", u64s({n, d}), signs);
    f.add_i32("frame_gap", u64s({n}), gap);
  }
  if (c.q) {
    f.add_i32("q_row_ptr", {c.q->row_ptr.size()}, to_i32(c.q->row_ptr));
    f.add_i32("q_col_idx", {c.q->col_idx.size()}, to_i32(c.q->col_idx));
    f.add_f64("q_blocks", u64s({c.q->nnz_blocks(), c.q->d, c.q->d}), c.q->blocks);
    f.add_i32("q_info", {2}, {c.q->n, c.q->d});
  }
  add_tensor(f, "scalar_scattering", c.features.scalar);
  add_tensor(f, "vector_scattering", c.features.vector);
  return encode(f);
}

FeatureCache decode_cache(std::span<const std::uint8_t> bytes) {
  const ArrayFile f = decode(bytes, kCacheMagic);
  FeatureCache c;
  const auto& pinfo = f.get("p_info").i32;
  c.p.n = pinfo.at(0);
  c.p.row_stochastic = pinfo.at(1) != 0;
  c.p.row_ptr = from_i32(f.get("p_row_ptr").i32);
  c.p.col_idx = from_i32(f.get("p_col_idx").i32);
  c.p.values = f.get("p_values").f64;
  if (f.find("frame_basis")) {
    const Array& b = f.get("frame_basis");
    const int n = static_cast<int>(b.shape.at(0));
    const int d = static_cast<int>(b.shape.at(1));
    const auto& sigma = f.get("frame_sigma").f64;
    const auto& signs = f.get("frame_signs").i32;
    const auto& gap = f.get("frame_gap").i32;
    LocalFrameSet set;
    set.d = d;
    set.frames.resize(n);
    for (int i = 0; i < n; ++i) {
      LocalFrame& fr = set.frames[i];
      fr.basis.resize(d, d);
      fr.singular_values.resize(d);
      for (int r = 0; r < d; ++r) {
        for (int k = 0; k < d; ++k) fr.basis(r, k) = b.f64[(i * d + r) * d + k];
      }
      for (int k = 0; k < d; ++k) {
        fr.singular_values[k] = sigma[i * d + k];
        fr.signs.push_back(static_cast<SignProvenance>(signs[i * d + k]));
      }
      fr.gap_flagged = gap[i] != 0;
    }
    c.frames = std::move(set);
  }
  if (f.find("q_info")) {
    const auto& qinfo = f.get("q_info").i32;
    BlockSparseOperator q;
    q.n = qinfo.at(0);
    q.d = qinfo.at(1);
    q.row_ptr = from_i32(f.get("q_row_ptr").i32);
    q.col_idx = from_i32(f.get("q_col_idx").i32);
    q.blocks = f.get("q_blocks").f64;
    c.q = std::move(q);
  }
  c.features.scalar = get_tensor(f, "scalar_scattering");
  c.features.vector = get_tensor(f, "vector_scattering");
  return c;
}

FeatureCache compute_cache(const GeometricGraph& graph, const FeatureConfig& config) {
  FeatureCache c;
  c.p = build_lazy_walk(graph);
  c.features.scalar = scalar_scattering(c.p, config.scalar_bank, scalar_inputs(graph, config.mode),
                                        config.scattering)
                          .values;
  if (config.mode == ModelMode::Equivariant) {
    FrameOptions fo;
    fo.canonicalize_signs = config.canonicalize_signs;
    c.frames = build_local_frames(graph, fo);
    c.q = build_vector_diffusion(c.p, *c.frames);
    c.features.vector = vector_scattering(*c.q, config.vector_bank, graph.vector_signals.at(0),
                                          config.scattering)
                            .values;
  }
  return c;
}

namespace {

json bank_json(const WaveletBank& b) {
  return {{"mode", bank_mode_name(b.mode)}, {"scales", b.scales}};
}

WaveletBank bank_from_json(const json& j) {
  WaveletBank b;
  b.scales = j.at("scales").get<std::vector<int>>();
  b.mode = parse_bank_mode(j.at("mode").get<std::string>());
  b.validate();
  return b;
}

json feature_json(const FeatureConfig& c) {
  return {{"mode", model_mode_name(c.mode)},
          {"scalar_bank", bank_json(c.scalar_bank)},
          {"vector_bank", bank_json(c.vector_bank)},
          {"max_order", c.scattering.max_order},
          {"include_diagonal", c.scattering.include_diagonal},
          {"canonicalize_signs", c.canonicalize_signs}};
}

FeatureConfig feature_from_json(const json& j) {
  FeatureConfig c;
  c.mode = parse_model_mode(j.at("mode").get<std::string>());
  c.scalar_bank = bank_from_json(j.at("scalar_bank"));
  c.vector_bank = bank_from_json(j.at("vector_bank"));
  c.scattering.max_order = j.at("max_order").get<int>();
  c.scattering.include_diagonal = j.at("include_diagonal").get<bool>();
  c.canonicalize_signs = j.at("canonicalize_signs").get<bool>();
  return c;
}

json model_json(const ModelConfig& c) {
  return {{"mode", model_mode_name(c.mode)},
          {"head", head_kind_name(c.head)},
          {"d", c.d},
          {"scalar_channels", c.scalar_channels},
          {"scalar_paths", c.scalar_paths},
          {"vector_paths", c.vector_paths},
          {"scalar_k", c.scalar_k},
          {"scalar_hidden", c.scalar_hidden},
          {"vector_k", c.vector_k},
          {"vector_hidden", c.vector_hidden},
          {"head_hidden", c.head_hidden},
          {"gate_hidden", c.gate_hidden},
          {"dropout", c.dropout},
          {"output_scale", c.output_scale},
          {"output_shift", c.output_shift},
          {"head_input_shift", c.head_input_shift},
          {"head_input_scale", c.head_input_scale}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c;
  c.mode = parse_model_mode(j.at("mode").get<std::string>());
  c.head = parse_head_kind(j.at("head").get<std::string>());
  c.d = j.at("d");
  c.scalar_channels = j.at("scalar_channels");
  c.scalar_paths = j.at("scalar_paths");
  c.vector_paths = j.at("vector_paths");
  c.scalar_k = j.at("scalar_k");
  c.scalar_hidden = j.at("scalar_hidden").get<std::vector<int>>();
  c.vector_k = j.at("vector_k");
  c.vector_hidden = j.at("vector_hidden").get<std::vector<int>>();
  c.head_hidden = j.at("head_hidden").get<std::vector<int>>();
  c.gate_hidden = j.at("gate_hidden").get<std::vector<int>>();
  c.dropout = j.at("dropout");
  c.output_scale = j.at("output_scale");
  c.output_shift = j.at("output_shift");
  c.head_input_shift = j.at("head_input_shift").get<std::vector<double>>();
  c.head_input_scale = j.at("head_input_scale").get<std::vector<double>>();
  return c;
}

}  // namespace

std::string describe(const FeatureConfig& config) { return feature_json(config).dump(); }

FeatureConfig parse_feature_config(std::string_view text) {
  try {
    return feature_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad feature config: ") + e.what());
  }
}

std::uint64_t cache_key(std::span<const std::uint8_t> record_bytes, const FeatureConfig& config) {
  const std::string desc = describe(config);
  const std::uint64_t h = fnv1a64(record_bytes);
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(desc.data()), desc.size()}, h);
}

std::vector<std::uint8_t> encode_model(const ModelFile& m) {
  json manifest = json::array();
  for (const auto& b : m.manifest) {
    manifest.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", b.offset}});
  }
  const json meta = {{"task", task_name(m.task)},
                     {"fold", m.fold},
                     {"seed", m.seed},
                     {"best_epoch", m.best_epoch},
                     {"best_val_mse", m.best_val_mse},
                     {"model", model_json(m.config)},
                     {"features", feature_json(m.features)},
                     {"manifest", manifest}};
  ArrayFile f;
  f.magic = kModelMagic;
  f.add_text("config", meta.dump());
  f.add_f64("params", {static_cast<std::uint64_t>(m.params.size())},
            std::vector<double>(m.params.data(), m.params.data() + m.params.size()));
  return encode(f);
}

ModelFile decode_model(std::span<const std::uint8_t> bytes) {
  const ArrayFile f = decode(bytes, kModelMagic);
  ModelFile m;
  json meta;
  try {
    meta = json::parse(f.text("config"));
    m.task = parse_task(meta.at("task").get<std::string>());
    m.fold = meta.at("fold");
    m.seed = meta.at("seed");
    m.best_epoch = meta.at("best_epoch");
    m.best_val_mse = meta.at("best_val_mse");
    m.config = model_from_json(meta.at("model"));
    m.features = feature_from_json(meta.at("features"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad model metadata: ") + e.what());
  }
  const auto& p = f.get("params").f64;
  m.params = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  const EscGnn probe(m.config);
  m.manifest = probe.manifest();
  const auto& stored = meta.at("manifest");
  bool same = stored.size() == m.manifest.size() && probe.parameter_count() == m.params.size();
  for (std::size_t k = 0; same && k < m.manifest.size(); ++k) {
    const auto& b = m.manifest[k];
    same = stored[k].at("name") == b.name && stored[k].at("rows") == b.rows &&
           stored[k].at("cols") == b.cols && stored[k].at("offset") == b.offset;
  }
  if (!same) throw Error(ErrorCode::ConfigMismatch, "parameter manifest does not match model config");
  return m;
}

}  // namespace escgnn::io
