#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medrex {

// Multi-pattern matcher over raw bytes. Children are kept as sorted
// (byte, node) vectors; dictionaries here are large (up to the whole UMLS
// medication slice) so a dense 256-way table per node would not fit.
//
// Reports every occurrence of every pattern, including nested ones, via the
// output-link chain. Callers that need leftmost-longest semantics select
// among the reported candidates themselves.
class AhoCorasick {
 public:
  // Returns the pattern id (existing id if the pattern was already added).
  int add_pattern(std::string_view pattern);

  // Builds failure and output links. Call once, after the last add_pattern.
  void build();

  bool built() const { return built_; }
  std::size_t pattern_count() const { return pattern_lengths_.size(); }
  std::uint32_t pattern_length(int id) const { return pattern_lengths_[static_cast<std::size_t>(id)]; }

  // Invokes on_hit(end_exclusive, pattern_id) for every occurrence.
  template <typename F>
  void scan(std::string_view text, F&& on_hit) const {
    if (nodes_.empty()) return;
    int state = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      state = step(state, static_cast<unsigned char>(text[i]));
      int out = nodes_[static_cast<std::size_t>(state)].output >= 0
                    ? state
                    : nodes_[static_cast<std::size_t>(state)].output_link;
      while (out >= 0) {
        on_hit(i + 1, nodes_[static_cast<std::size_t>(out)].output);
        out = nodes_[static_cast<std::size_t>(out)].output_link;
      }
    }
  }

 private:
  struct Node {
    std::vector<std::pair<unsigned char, int>> next;  // sorted by byte
    int fail = 0;
    int output = -1;       // pattern id ending here
    int output_link = -1;  // nearest fail-chain ancestor with an output
  };

  int child(int node, unsigned char c) const;
  int step(int state, unsigned char c) const;

  std::vector<Node> nodes_{1};
  std::vector<std::uint32_t> pattern_lengths_;
  bool built_ = false;
};

}  // namespace medrex
