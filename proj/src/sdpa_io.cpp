#include "ratecert/sdpa_io.hpp"

#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace ratecert {

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Tokens {
 public:
  explicit Tokens(std::string text) : text_(std::move(text)) {
    for (char& c : text_)
      if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',') c = ' ';
  }

  bool next(std::string_view& tok) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok = std::string_view(text_).substr(start, pos_ - start);
    return true;
  }

  std::string_view need(const char* what) {
    std::string_view t;
    if (!next(t)) fail(std::string("unexpected end of input, expected ") + what);
    return t;
  }

  long integer(const char* what) {
    const auto t = need(what);
    long v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
      fail(std::string("expected integer ") + what + ", got '" + std::string(t) + "'");
    return v;
  }

  double real(const char* what) {
    auto t = need(what);
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
      fail(std::string("expected number ") + what + ", got '" + std::string(t) + "'");
    return v;
  }

  // Header lines may carry trailing annotations such as "= mDIM".
  void skip_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("sdpa line " + std::to_string(line_) + ": " + msg);
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

void write_sdpa(std::ostream& out, const SdpProblem& p) {
  p.validate();
  const Index nf = p.num_free;
  const bool has_free = nf > 0;
  out << "\"ratecert SdpProblem\n";
  out << p.constraints.size() << "\n";
  out << p.blocks.size() + (has_free ? 1 : 0) << "\n";
  for (std::size_t k = 0; k < p.blocks.size(); ++k) out << (k ? " " : "") << p.blocks[k];
  if (has_free) out << " " << -2 * nf;
  out << "\n";
  for (std::size_t c = 0; c < p.constraints.size(); ++c) out << (c ? " " : "") << num(p.constraints[c].b);
  out << "\n";

  auto entry = [&](std::size_t mat, Index block, Index i, Index j, double v) {
    if (v == 0.0) return;
    if (i > j) std::swap(i, j);
    out << mat << " " << block + 1 << " " << i + 1 << " " << j + 1 << " " << num(v) << "\n";
  };
  const Index free_block = static_cast<Index>(p.blocks.size());
  for (const auto& e : p.objective) entry(0, e.block, e.i, e.j, -e.value);
  if (has_free && p.free_cost.size()) {
    for (Index l = 0; l < nf; ++l) {
      entry(0, free_block, l, l, -p.free_cost(l));
      entry(0, free_block, nf + l, nf + l, p.free_cost(l));
    }
  }
  for (std::size_t c = 0; c < p.constraints.size(); ++c) {
    for (const auto& e : p.constraints[c].entries) entry(c + 1, e.block, e.i, e.j, e.value);
    for (const auto& [l, f] : p.constraints[c].free_coeffs) {
      entry(c + 1, free_block, l, l, f);
      entry(c + 1, free_block, nf + l, nf + l, -f);
    }
  }
}

std::string to_sdpa(const SdpProblem& p) {
  std::ostringstream s;
  write_sdpa(s, p);
  return s.str();
}

SdpProblem read_sdpa(std::istream& in) {
  std::ostringstream body;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header && !line.empty() && (line[0] == '"' || line[0] == '*')) {
      body << "\n";
      continue;
    }
    header = false;
    body << line << "\n";
  }
  Tokens tok(body.str());

  const long m = tok.integer("(number of constraints)");
  tok.skip_line();
  const long nblocks = tok.integer("(number of blocks)");
  tok.skip_line();
  if (m < 0 || nblocks < 1) tok.fail("constraint count must be >= 0 and block count >= 1");

  // SDPA block -> first internal block and whether it is diagonal
  struct Map {
    Index first;
    Index size;
    bool diagonal;
  };
  std::vector<Map> map;
  SdpProblem p;
  for (long k = 0; k < nblocks; ++k) {
    const long s = tok.integer("(block size)");
    if (s == 0) tok.fail("block size 0");
    if (s > 0) {
      map.push_back({static_cast<Index>(p.blocks.size()), s, false});
      p.blocks.push_back(s);
    } else {
      map.push_back({static_cast<Index>(p.blocks.size()), -s, true});
      for (long i = 0; i < -s; ++i) p.blocks.push_back(1);
    }
  }
  tok.skip_line();
  p.constraints.resize(static_cast<std::size_t>(m));
  for (long c = 0; c < m; ++c) p.constraints[static_cast<std::size_t>(c)].b = tok.real("(c vector entry)");

  std::string_view t;
  while (tok.next(t)) {
    long mat = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), mat);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) tok.fail("expected matrix number, got '" + std::string(t) + "'");
    const long blk = tok.integer("(block number)");
    long i = tok.integer("(row)");
    long j = tok.integer("(column)");
    const double v = tok.real("(value)");
    if (mat < 0 || mat > m) tok.fail("matrix number out of range");
    if (blk < 1 || blk > nblocks) tok.fail("block number out of range");
    const Map& bm = map[static_cast<std::size_t>(blk - 1)];
    if (i < 1 || j < 1 || i > bm.size || j > bm.size) tok.fail("entry index out of range");
    if (i > j) std::swap(i, j);
    SdpEntry e;
    if (bm.diagonal) {
      if (i != j) tok.fail("off-diagonal entry in a diagonal block");
      e = {bm.first + i - 1, 0, 0, v};
    } else {
      e = {bm.first, i - 1, j - 1, v};
    }
    if (mat == 0) {
      e.value = -e.value;
      p.objective.push_back(e);
    } else {
      p.constraints[static_cast<std::size_t>(mat - 1)].entries.push_back(e);
    }
  }
  return p;
}

SdpProblem parse_sdpa(const std::string& text) {
  std::istringstream s(text);
  return read_sdpa(s);
}

}  // namespace ratecert
