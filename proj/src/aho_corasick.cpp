#include "medrex/aho_corasick.hpp"

#include <algorithm>
#include <cassert>
#include <queue>

namespace medrex {

int AhoCorasick::child(int node, unsigned char c) const {
  const auto& next = nodes_[static_cast<std::size_t>(node)].next;
  auto it = std::lower_bound(next.begin(), next.end(), c,
                             [](const std::pair<unsigned char, int>& e, unsigned char b) { return e.first < b; });
  if (it != next.end() && it->first == c) return it->second;
  return -1;
}

int AhoCorasick::step(int state, unsigned char c) const {
  for (;;) {
    int nxt = child(state, c);
    if (nxt >= 0) return nxt;
    if (state == 0) return 0;
    state = nodes_[static_cast<std::size_t>(state)].fail;
  }
}

int AhoCorasick::add_pattern(std::string_view pattern) {
  assert(!built_);
  assert(!pattern.empty());
  int node = 0;
  for (char ch : pattern) {
    unsigned char c = static_cast<unsigned char>(ch);
    int nxt = child(node, c);
    if (nxt < 0) {
      nxt = static_cast<int>(nodes_.size());
      nodes_.emplace_back();
      auto& next = nodes_[static_cast<std::size_t>(node)].next;
      auto it = std::lower_bound(next.begin(), next.end(), c,
                                 [](const std::pair<unsigned char, int>& e, unsigned char b) { return e.first < b; });
      next.insert(it, {c, nxt});
    }
    node = nxt;
  }
  auto& terminal = nodes_[static_cast<std::size_t>(node)];
  if (terminal.output >= 0) return terminal.output;
  terminal.output = static_cast<int>(pattern_lengths_.size());
  pattern_lengths_.push_back(static_cast<std::uint32_t>(pattern.size()));
  return terminal.output;
}

void AhoCorasick::build() {
  std::queue<int> queue;
  for (const auto& [c, v] : nodes_[0].next) {
    nodes_[static_cast<std::size_t>(v)].fail = 0;
    queue.push(v);
  }
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop();
    Node& un = nodes_[static_cast<std::size_t>(u)];
    const Node& fn = nodes_[static_cast<std::size_t>(un.fail)];
    un.output_link = fn.output >= 0 ? un.fail : fn.output_link;
    for (const auto& [c, v] : un.next) {
      int f = un.fail;
      int w = -1;
      for (;;) {
        w = child(f, c);
        if (w >= 0 || f == 0) break;
        f = nodes_[static_cast<std::size_t>(f)].fail;
      }
      nodes_[static_cast<std::size_t>(v)].fail = (w >= 0 && w != v) ? w : 0;
      queue.push(v);
    }
  }
  built_ = true;
}

}  // namespace medrex
