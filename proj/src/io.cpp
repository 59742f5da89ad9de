#include "io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace must {

namespace {

constexpr char kFeatMagic[8] = {'M', 'U', 'S', 'T', 'F', 'E', 'A', 'T'};
constexpr char kCkptMagic[8] = {'M', 'U', 'S', 'T', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFeatVersion = 1;
constexpr uint32_t kCkptVersion = 1;

void append_raw(std::string& buf, const void* p, size_t n) {
  buf.append(static_cast<const char*>(p), n);
}
void append_u32(std::string& buf, uint32_t v) { append_raw(buf, &v, 4); }
void append_u64(std::string& buf, uint64_t v) { append_raw(buf, &v, 8); }
void append_str(std::string& buf, const std::string& s) {
  append_u32(buf, static_cast<uint32_t>(s.size()));
  buf.append(s);
}
void append_tensor(std::string& buf, const Tensor& t) {
  append_u32(buf, static_cast<uint32_t>(t.ndim()));
  append_u64(buf, t.rows());
  append_u64(buf, t.cols());
  append_raw(buf, t.data().data(), t.data().size() * sizeof(double));
}

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  void raw(void* out, size_t n) {
    if (pos_ + n > data_.size()) fail(Errc::format, name_ + ": truncated file");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() { uint32_t v; raw(&v, 4); return v; }
  uint64_t u64() { uint64_t v; raw(&v, 8); return v; }
  std::string str() {
    uint32_t n = u32();
    if (pos_ + n > data_.size()) fail(Errc::format, name_ + ": truncated string");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    uint32_t nd = u32();
    uint64_t rows = u64();
    uint64_t cols = u64();
    if (nd < 1 || nd > 2 || rows * cols > (1ull << 32)) fail(Errc::format, name_ + ": bad tensor header");
    std::vector<double> data(rows * cols);
    raw(data.data(), data.size() * sizeof(double));
    return nd == 1 ? Tensor::vector(std::move(data)) : Tensor::matrix(rows, cols, std::move(data));
  }
  size_t remaining() const { return data_.size() - pos_; }
  std::string_view view_from(size_t offset) const {
    return std::string_view(data_).substr(offset);
  }
  size_t pos() const { return pos_; }

 private:
  std::string data_;
  std::string name_;
  size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::format, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::format, "cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::format, "short write to '" + path.string() + "'");
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string serialize_space(const CompositionSpace& sp) {
  std::string buf;
  append_u32(buf, static_cast<uint32_t>(sp.n_states()));
  for (const auto& s : sp.state_names()) append_str(buf, s);
  append_u32(buf, static_cast<uint32_t>(sp.n_objects()));
  for (const auto& o : sp.object_names()) append_str(buf, o);
  append_u64(buf, sp.n_pairs());
  for (size_t i = 0; i < sp.n_pairs(); ++i) {
    const Pair p = sp.pairs()[i];
    append_u32(buf, static_cast<uint32_t>(p.state));
    append_u32(buf, static_cast<uint32_t>(p.object));
    buf.push_back(sp.is_seen(static_cast<PairId>(i)) ? 1 : 0);
  }
  return buf;
}

CompositionSpace deserialize_space(Reader& r) {
  std::vector<std::string> states(r.u32());
  for (auto& s : states) s = r.str();
  std::vector<std::string> objects(r.u32());
  for (auto& o : objects) o = r.str();
  const uint64_t n_pairs = r.u64();
  std::vector<Pair> seen, unseen;
  std::vector<std::pair<Pair, bool>> ordered(n_pairs);
  for (auto& [p, s] : ordered) {
    p.state = static_cast<int32_t>(r.u32());
    p.object = static_cast<int32_t>(r.u32());
    char flag;
    r.raw(&flag, 1);
    s = flag != 0;
  }
  // Rebuild with ids preserved: the serialization lists pairs in id order.
  for (const auto& [p, s] : ordered) (s ? seen : unseen).push_back(p);
  CompositionSpace sp = CompositionSpace::build(states, objects, seen, unseen);
  // build() assigns seen ids first; verify the order round-trips.
  for (size_t i = 0; i < n_pairs; ++i) {
    if (!(sp.pairs()[i] == ordered[i].first)) {
      fail(Errc::format, "checkpoint space pair order is not seen-first");
    }
  }
  return sp;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val_seen: return "val_seen";
    case Split::val_unseen: return "val_unseen";
    case Split::test_seen: return "test_seen";
    case Split::test_unseen: return "test_unseen";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  for (Split v : {Split::train, Split::val_seen, Split::val_unseen, Split::test_seen,
                  Split::test_unseen}) {
    if (s == split_name(v)) return v;
  }
  fail(Errc::format, "unknown split tag '" + s + "'");
}

std::vector<size_t> DatasetBundle::split_indices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == s) out.push_back(i);
  }
  return out;
}

void write_float_matrix(const std::filesystem::path& path, const Tensor& m) {
  std::string buf;
  buf.reserve(24 + m.numel() * 4);
  append_raw(buf, kFeatMagic, 8);
  append_u32(buf, kFeatVersion);
  append_u64(buf, m.rows());
  append_u32(buf, static_cast<uint32_t>(m.cols()));
  for (double v : m.data()) {
    const float f = static_cast<float>(v);
    append_raw(buf, &f, 4);
  }
  write_file(path, buf);
}

Tensor read_float_matrix(const std::filesystem::path& path) {
  Reader r(read_file(path), path.filename().string());
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kFeatMagic, 8) != 0) {
    fail(Errc::format, path.filename().string() + ": bad magic, expected MUSTFEAT");
  }
  const uint32_t version = r.u32();
  if (version != kFeatVersion) {
    fail(Errc::format, path.filename().string() + ": unsupported version " + std::to_string(version));
  }
  const uint64_t n = r.u64();
  const uint32_t dim = r.u32();
  if (r.remaining() != n * dim * 4) {
    fail(Errc::format, path.filename().string() + ": payload size does not match header counts");
  }
  Tensor m(n, dim);
  for (size_t i = 0; i < m.numel(); ++i) {
    float f;
    r.raw(&f, 4);
    m[i] = static_cast<double>(f);
  }
  return m;
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  if (bundle.word_states.cols() != bundle.word_objects.cols()) {
    fail(Errc::shape, "state and object word vectors must share one width");
  }
  std::filesystem::create_directories(dir);
  const CompositionSpace& sp = bundle.space;

  std::ostringstream md;
  md << "format = MUSTMETA\n";
  md << "version = 1\n";
  md << "n_states = " << sp.n_states() << "\n";
  md << "n_objects = " << sp.n_objects() << "\n";
  md << "n_pairs = " << sp.n_pairs() << "\n";
  md << "n_samples = " << bundle.samples.size() << "\n";
  md << "feature_dim = " << bundle.features.cols() << "\n";
  for (int32_t i = 0; i < sp.n_states(); ++i) md << "state " << i << " " << sp.state_names()[i] << "\n";
  for (int32_t i = 0; i < sp.n_objects(); ++i) md << "object " << i << " " << sp.object_names()[i] << "\n";
  for (size_t i = 0; i < sp.n_pairs(); ++i) {
    const Pair p = sp.pairs()[i];
    md << "pair " << i << " " << p.state << " " << p.object << " "
       << (sp.is_seen(static_cast<PairId>(i)) ? "seen" : "unseen") << "\n";
  }
  for (const Sample& s : bundle.samples) {
    md << "sample " << s.feature_row << " " << s.state << " " << s.object << " "
       << split_name(s.split) << "\n";
  }
  write_file(dir / "metadata.txt", md.str());
  write_float_matrix(dir / "features.bin", bundle.features);

  Tensor emb(sp.n_states() + sp.n_objects(), bundle.word_states.cols());
  for (size_t i = 0; i < bundle.word_states.rows(); ++i) {
    for (size_t d = 0; d < emb.cols(); ++d) emb.at(i, d) = bundle.word_states.at(i, d);
  }
  for (size_t i = 0; i < bundle.word_objects.rows(); ++i) {
    for (size_t d = 0; d < emb.cols(); ++d) {
      emb.at(sp.n_states() + i, d) = bundle.word_objects.at(i, d);
    }
  }
  write_float_matrix(dir / "embeddings.bin", emb);
}

namespace {

struct MetaDoc {
  std::map<std::string, std::string> kv;
  std::vector<std::string> states, objects;
  std::vector<std::pair<Pair, bool>> pairs;  // in id order
  std::vector<Sample> samples;
};

int64_t parse_int(const std::string& tok, int line, const char* what) {
  try {
    size_t used = 0;
    const int64_t v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(Errc::format, "metadata line " + std::to_string(line) + ": bad " + what + " '" + tok + "'");
  }
}

MetaDoc parse_metadata(const std::string& text) {
  MetaDoc doc;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  std::vector<std::pair<int64_t, std::string>> state_rows, object_rows;
  std::vector<std::pair<int64_t, std::pair<Pair, bool>>> pair_rows;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    const size_t first = trimmed.find_first_not_of(" \t");
    if (first == std::string::npos || trimmed[first] == '#') continue;

    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "state" || head == "object") {
      int64_t id;
      std::string name;
      std::string id_tok;
      if (!(ls >> id_tok >> name)) fail(Errc::format, "metadata line " + std::to_string(line_no) + ": expected '<id> <name>'");
      id = parse_int(id_tok, line_no, "id");
      (head == "state" ? state_rows : object_rows).push_back({id, name});
    } else if (head == "pair") {
      std::string id_tok, s_tok, o_tok, tag;
      if (!(ls >> id_tok >> s_tok >> o_tok >> tag)) {
        fail(Errc::format, "metadata line " + std::to_string(line_no) + ": expected 'pair <id> <state> <object> <seen|unseen>'");
      }
      Pair p{static_cast<int32_t>(parse_int(s_tok, line_no, "state id")),
             static_cast<int32_t>(parse_int(o_tok, line_no, "object id"))};
      bool seen;
      if (tag == "seen") seen = true;
      else if (tag == "unseen") seen = false;
      else fail(Errc::format, "metadata line " + std::to_string(line_no) + ": pair tag must be seen|unseen");
      pair_rows.push_back({parse_int(id_tok, line_no, "pair id"), {p, seen}});
    } else if (head == "sample") {
      std::string r_tok, s_tok, o_tok, tag;
      if (!(ls >> r_tok >> s_tok >> o_tok >> tag)) {
        fail(Errc::format, "metadata line " + std::to_string(line_no) + ": expected 'sample <row> <state> <object> <split>'");
      }
      Sample s;
      s.feature_row = parse_int(r_tok, line_no, "feature row");
      s.state = static_cast<int32_t>(parse_int(s_tok, line_no, "state id"));
      s.object = static_cast<int32_t>(parse_int(o_tok, line_no, "object id"));
      try {
        s.split = parse_split(tag);
      } catch (const MustError&) {
        fail(Errc::format, "metadata line " + std::to_string(line_no) + ": unknown split '" + tag + "'");
      }
      doc.samples.push_back(s);
    } else {
      // key = value
      std::string eq, value;
      if (!(ls >> eq >> value) || eq != "=") {
        fail(Errc::format, "metadata line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      if (!doc.kv.emplace(head, value).second) {
        fail(Errc::format, "metadata line " + std::to_string(line_no) + ": duplicate key '" + head + "'");
      }
    }
  }

  auto require = [&](const char* key) -> std::string {
    auto it = doc.kv.find(key);
    if (it == doc.kv.end()) fail(Errc::format, std::string("metadata: missing key '") + key + "'");
    return it->second;
  };
  if (require("format") != "MUSTMETA") fail(Errc::format, "metadata: format must be MUSTMETA");
  if (require("version") != "1") fail(Errc::format, "metadata: unsupported version");

  auto fill_indexed = [&](std::vector<std::pair<int64_t, std::string>>& rows, const char* key,
                          const char* what) {
    const int64_t n = parse_int(require(key), 0, key);
    std::vector<std::string> out(static_cast<size_t>(n));
    std::vector<bool> present(static_cast<size_t>(n), false);
    if (static_cast<int64_t>(rows.size()) != n) {
      fail(Errc::format, std::string("metadata: ") + key + " declares " + std::to_string(n) + " but " +
                             std::to_string(rows.size()) + " " + what + " lines found");
    }
    for (auto& [id, name] : rows) {
      if (id < 0 || id >= n || present[id]) {
        fail(Errc::format, std::string("metadata: ") + what + " ids must cover 0.." + std::to_string(n - 1) + " exactly once");
      }
      present[id] = true;
      out[id] = std::move(name);
    }
    return out;
  };
  doc.states = fill_indexed(state_rows, "n_states", "state");
  doc.objects = fill_indexed(object_rows, "n_objects", "object");

  const int64_t n_pairs = parse_int(require("n_pairs"), 0, "n_pairs");
  if (static_cast<int64_t>(pair_rows.size()) != n_pairs) {
    fail(Errc::format, "metadata: n_pairs does not match the pair lines");
  }
  doc.pairs.resize(static_cast<size_t>(n_pairs));
  std::vector<bool> pair_present(static_cast<size_t>(n_pairs), false);
  for (auto& [id, pr] : pair_rows) {
    if (id < 0 || id >= n_pairs || pair_present[id]) {
      fail(Errc::format, "metadata: pair ids must cover 0.." + std::to_string(n_pairs - 1) + " exactly once");
    }
    pair_present[id] = true;
    doc.pairs[id] = pr;
  }

  const int64_t n_samples = parse_int(require("n_samples"), 0, "n_samples");
  if (static_cast<int64_t>(doc.samples.size()) != n_samples) {
    fail(Errc::format, "metadata: n_samples does not match the sample lines");
  }
  return doc;
}

}  // namespace

DatasetBundle load_bundle(const std::filesystem::path& dir) {
  MetaDoc doc = parse_metadata(read_file(dir / "metadata.txt"));

  std::vector<Pair> seen, unseen;
  for (const auto& [p, s] : doc.pairs) (s ? seen : unseen).push_back(p);
  CompositionSpace space = CompositionSpace::build(doc.states, doc.objects, seen, unseen);
  // Dense ids are assigned seen-first; the file's explicit ids must agree.
  for (size_t i = 0; i < doc.pairs.size(); ++i) {
    if (!(space.pairs()[i] == doc.pairs[i].first)) {
      fail(Errc::format, "metadata: pair ids must list all seen pairs before unseen pairs");
    }
  }

  DatasetBundle bundle;
  bundle.space = std::move(space);
  bundle.features = read_float_matrix(dir / "features.bin");
  const int64_t feature_dim = std::stoll(doc.kv.at("feature_dim"));
  if (static_cast<int64_t>(bundle.features.cols()) != feature_dim) {
    fail(Errc::format, "features.bin dim " + std::to_string(bundle.features.cols()) +
                           " != metadata feature_dim " + std::to_string(feature_dim));
  }

  Tensor emb = read_float_matrix(dir / "embeddings.bin");
  const size_t ns = static_cast<size_t>(bundle.space.n_states());
  const size_t no = static_cast<size_t>(bundle.space.n_objects());
  if (emb.rows() != ns + no) {
    fail(Errc::format, "embeddings.bin rows " + std::to_string(emb.rows()) +
                           " != n_states + n_objects = " + std::to_string(ns + no));
  }
  bundle.word_states = Tensor(ns, emb.cols());
  bundle.word_objects = Tensor(no, emb.cols());
  for (size_t i = 0; i < ns; ++i) {
    for (size_t d = 0; d < emb.cols(); ++d) bundle.word_states.at(i, d) = emb.at(i, d);
  }
  for (size_t i = 0; i < no; ++i) {
    for (size_t d = 0; d < emb.cols(); ++d) bundle.word_objects.at(i, d) = emb.at(ns + i, d);
  }

  for (const Sample& s : doc.samples) {
    if (s.feature_row < 0 || s.feature_row >= static_cast<int64_t>(bundle.features.rows())) {
      fail(Errc::format, "sample feature row " + std::to_string(s.feature_row) + " out of range");
    }
    const PairId pid = bundle.space.pair_id(s.state, s.object);
    if (pid < 0) {
      fail(Errc::format, "sample labeled with a pair outside the closed world");
    }
    const bool pair_seen = bundle.space.is_seen(pid);
    const bool wants_seen =
        s.split == Split::train || s.split == Split::val_seen || s.split == Split::test_seen;
    if (pair_seen != wants_seen) {
      fail(Errc::split_violation, std::string("sample split '") + split_name(s.split) +
                                      "' labeled with a " + (pair_seen ? "seen" : "unseen") + " pair");
    }
  }
  if (!bundle.features.all_finite()) fail(Errc::format, "features.bin contains non-finite values");
  bundle.samples = std::move(doc.samples);
  return bundle;
}

void save_checkpoint(const MustModel& model, const std::filesystem::path& path,
                     const std::string& config_text) {
  std::string payload;
  payload += serialize_space(model.space());
  const ModelConfig& cfg = model.config();
  append_u32(payload, static_cast<uint32_t>(cfg.feat_dim));
  append_u32(payload, static_cast<uint32_t>(cfg.embed_dim));
  append_u32(payload, static_cast<uint32_t>(cfg.word_dim));
  append_u64(payload, cfg.init_seed);
  append_str(payload, config_text);
  append_tensor(payload, model.word_states());
  append_tensor(payload, model.word_objects());
  const auto params = model.params();
  append_u32(payload, static_cast<uint32_t>(params.size()));
  for (const Param* p : params) {
    append_str(payload, p->name);
    append_tensor(payload, p->value);
  }

  std::string out;
  append_raw(out, kCkptMagic, 8);
  append_u32(out, kCkptVersion);
  append_u64(out, fnv1a64(payload));
  out += payload;
  write_file(path, out);
}

MustModel load_checkpoint(const std::filesystem::path& path, std::string* config_text_out) {
  Reader r(read_file(path), path.filename().string());
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0) {
    fail(Errc::format, path.filename().string() + ": bad magic, expected MUSTCKPT");
  }
  if (r.u32() != kCkptVersion) fail(Errc::format, "checkpoint: unsupported version");
  const uint64_t stored_hash = r.u64();
  if (fnv1a64(r.view_from(r.pos())) != stored_hash) {
    fail(Errc::format, "checkpoint: integrity hash mismatch");
  }

  CompositionSpace space = deserialize_space(r);
  ModelConfig cfg;
  cfg.feat_dim = static_cast<int32_t>(r.u32());
  cfg.embed_dim = static_cast<int32_t>(r.u32());
  cfg.word_dim = static_cast<int32_t>(r.u32());
  cfg.init_seed = r.u64();
  const std::string config_text = r.str();
  Tensor word_states = r.tensor();
  Tensor word_objects = r.tensor();

  MustModel model(std::move(space), std::move(word_states), std::move(word_objects), cfg);
  auto params = model.params();
  const uint32_t n_params = r.u32();
  if (n_params != params.size()) {
    fail(Errc::format, "checkpoint: parameter count mismatch");
  }
  for (uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    Tensor value = r.tensor();
    if (params[i]->name != name) {
      fail(Errc::format, "checkpoint: unexpected parameter '" + name + "'");
    }
    if (!params[i]->value.same_shape(value)) {
      fail(Errc::format, "checkpoint: shape mismatch for parameter '" + name + "'");
    }
    params[i]->value = std::move(value);
  }
  if (config_text_out) *config_text_out = config_text;
  return model;
}

void check_compat(const MustModel& model, const DatasetBundle& bundle) {
  if (model.space().canonical_serialization() != bundle.space.canonical_serialization()) {
    fail(Errc::compat, "checkpoint space does not match the dataset space");
  }
  if (model.config().feat_dim != bundle.feat_dim()) {
    fail(Errc::compat, "checkpoint feature dim " + std::to_string(model.config().feat_dim) +
                           " != dataset feature dim " + std::to_string(bundle.feat_dim()));
  }
}

}  // namespace must
