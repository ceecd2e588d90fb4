#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

#include "taptype/lm.hpp"

namespace taptype::lm {

namespace {

const double kLn10 = std::log(10.0);

double to_log10(double ln) { return ln / kLn10; }
double from_log10(double l10) { return l10 * kLn10; }

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError("bad number '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

}  // namespace

void write_arpa(const NGramModel& model, std::ostream& out) {
  const auto& vocab = model.vocab();
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= model.order(); ++n)
    out << "ngram " << n << '=' << model.ngrams(n).size() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t n = 1; n <= model.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    std::vector<const std::pair<const TokenSeq, NGramEntry>*> rows;
    for (const auto& kv : model.ngrams(n)) rows.push_back(&kv);
    std::sort(rows.begin(), rows.end(), [](auto a, auto b) { return a->first < b->first; });
    for (const auto* kv : rows) {
      const double lp = kv->first.size() == 1 && kv->first[0] == Vocabulary::kBos
                            ? kLog10Impossible
                            : to_log10(kv->second.log_prob);
      out << lp << '\t';
      for (std::size_t i = 0; i < kv->first.size(); ++i)
        out << (i ? " " : "") << vocab.word(kv->first[i]);
      if (n < model.order()) out << '\t' << to_log10(kv->second.log_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NGramModel read_arpa(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };

  while (next() && line != "\\data\\") {
  }
  if (line != "\\data\\") throw ParseError("missing \\data\\ header", lineno);

  std::vector<std::size_t> counts;
  while (next() && line.rfind("ngram ", 0) == 0) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("bad ngram count line", lineno);
    std::size_t n = 0, c = 0;
    const std::string lhs = line.substr(6, eq - 6), rhs = line.substr(eq + 1);
    if (std::from_chars(lhs.data(), lhs.data() + lhs.size(), n).ec != std::errc{} ||
        std::from_chars(rhs.data(), rhs.data() + rhs.size(), c).ec != std::errc{})
      throw ParseError("bad ngram count line", lineno);
    if (n != counts.size() + 1) throw ParseError("ngram counts out of order", lineno);
    counts.push_back(c);
  }
  if (counts.empty()) throw ParseError("no ngram counts", lineno);

  struct Row {
    std::vector<std::string> words;
    double lp, bow;
  };
  std::vector<std::vector<Row>> sections(counts.size());
  for (std::size_t n = 1; n <= counts.size(); ++n) {
    if (line != "\\" + std::to_string(n) + "-grams:")
      throw ParseError("expected \\" + std::to_string(n) + "-grams:", lineno);
    for (std::size_t i = 0; i < counts[n - 1]; ++i) {
      if (!next()) throw ParseError("unexpected end of file", lineno);
      const auto f = fields(line);
      if (f.size() != n + 1 && f.size() != n + 2)
        throw ParseError("expected " + std::to_string(n) + "-gram entry", lineno);
      Row r;
      r.lp = parse_double(f[0], lineno);
      r.words.assign(f.begin() + 1, f.begin() + 1 + static_cast<std::ptrdiff_t>(n));
      r.bow = f.size() == n + 2 ? parse_double(f.back(), lineno) : 0.0;
      sections[n - 1].push_back(std::move(r));
    }
    if (!next()) throw ParseError("unexpected end of file", lineno);
  }
  if (line != "\\end\\") throw ParseError("expected \\end\\", lineno);

  Vocabulary vocab;
  for (const auto& r : sections[0]) vocab.add(r.words[0]);
  NGramModel model(std::move(vocab), counts.size());
  for (const auto& section : sections) {
    for (const auto& r : section) {
      TokenSeq key;
      for (const auto& w : r.words) {
        auto t = model.vocab().find(w);
        if (!t) throw ParseError("word '" + w + "' missing from unigrams");
        key.push_back(*t);
      }
      model.set(key, {from_log10(r.lp), from_log10(r.bow)});
    }
  }
  return model;
}

void save_arpa(const NGramModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_arpa(model, out);
}

NGramModel load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ARPA file " + path);
  return read_arpa(in);
}

}  // namespace taptype::lm
