#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "saecon/corpus.hpp"

namespace saecon::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("saecon_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& p,
                                        const std::string& content) {
  std::ofstream out(p);
  out << content;
  return p;
}

inline std::string cpc_jsonl_line(const std::string& id, const std::string& sentence,
                                  const std::string& a_text, size_t a_start,
                                  const std::string& b_text, size_t b_start,
                                  const std::string& label) {
  auto span = [](const std::string& text, size_t start) {
    return "{\"text\":\"" + text + "\",\"start\":" + std::to_string(start) +
           ",\"end\":" + std::to_string(start + text.size()) + "}";
  };
  return "{\"id\":\"" + id + "\",\"sentence\":\"" + sentence + "\",\"entity_a\":" +
         span(a_text, a_start) + ",\"entity_b\":" + span(b_text, b_start) +
         ",\"label\":\"" + label + "\"}";
}

// In-memory CPC instance over a template sentence "<A> vs <B> filler".
inline CpcInstance make_cpc(const std::string& id, CpcLabel label,
                            const std::string& a = "alpha",
                            const std::string& b = "beta") {
  CpcInstance inst;
  inst.id = id;
  inst.sentence = a + " versus " + b + " overall";
  inst.entity_a = {a, 0, a.size()};
  inst.entity_b = {b, a.size() + 8, a.size() + 8 + b.size()};
  inst.label = label;
  return inst;
}

inline std::vector<CpcInstance> make_corpus(size_t better, size_t worse, size_t none) {
  std::vector<CpcInstance> out;
  size_t k = 0;
  for (size_t i = 0; i < better; ++i)
    out.push_back(make_cpc("b" + std::to_string(k++), CpcLabel::Better));
  for (size_t i = 0; i < worse; ++i)
    out.push_back(make_cpc("w" + std::to_string(k++), CpcLabel::Worse));
  for (size_t i = 0; i < none; ++i)
    out.push_back(make_cpc("n" + std::to_string(k++), CpcLabel::None));
  return out;
}

}  // namespace saecon::testing
