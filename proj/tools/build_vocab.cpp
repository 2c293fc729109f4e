// Learns a merge vocabulary from JSONL documents and writes one entry per line.
// Text from --translit-in files is romanized first, so the vocabulary can mix
// Devanagari and Latin-script Hindi in chosen proportions.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>

#include "hicurate/text.hpp"
#include "hicurate/tokenizer.hpp"
#include "hicurate/translit.hpp"

namespace {

void count_words(const std::string& path, bool romanize, std::uint64_t weight,
                 std::map<std::string, std::uint64_t>& counts) {
  std::istringstream in(hicurate::text::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (hicurate::text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    std::string body = j.at("text").get<std::string>();
    if (romanize) body = hicurate::transliterate(body);
    for (const auto& w : hicurate::text::split_whitespace(body)) counts[std::string(w)] += weight;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn a merge vocabulary"};
  std::vector<std::string> inputs, translit_inputs;
  std::size_t size = 2000;
  std::uint64_t native_weight = 1;
  std::string out, measure;
  app.add_option("--in", inputs, "JSONL files counted as-is")->check(CLI::ExistingFile);
  app.add_option("--translit-in", translit_inputs, "JSONL files romanized before counting")->check(CLI::ExistingFile);
  app.add_option("--size", size, "Target vocabulary size");
  app.add_option("--native-weight", native_weight, "Count multiplier for --in text relative to romanized text")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output vocab file")->required();
  app.add_option("--measure", measure, "JSONL file: report token expansion of its romanized text")
      ->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& p : inputs) count_words(p, false, native_weight, counts);
    for (const auto& p : translit_inputs) count_words(p, true, 1, counts);
    std::string body;
    for (const auto& v : hicurate::learn_merge_vocab(counts, size)) body += v + "\n";
    hicurate::text::write_file(out, body);
    std::cerr << "words=" << counts.size() << " vocab=" << std::count(body.begin(), body.end(), '\n') << "\n";
    if (!measure.empty()) {
      const auto tok = hicurate::Tokenizer::from_vocab_file("ref", out);
      std::istringstream in(hicurate::text::read_file(measure));
      std::string line;
      std::size_t native = 0, roman = 0;
      while (std::getline(in, line)) {
        if (hicurate::text::trim(line).empty()) continue;
        const std::string t = nlohmann::json::parse(line).at("text").get<std::string>();
        native += tok.count(t);
        roman += tok.count(hicurate::transliterate(t));
      }
      std::cout << "native_tokens=" << native << " romanized_tokens=" << roman
                << " expansion=" << (native ? double(roman) / double(native) : 0.0) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "build_vocab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
