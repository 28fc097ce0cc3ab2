#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace catgates {

/// Maximum-weight matching on a general graph (Edmonds' blossom algorithm,
/// primal-dual form, O(n^3)). Integer weights keep every dual exact.
/// Returns mate[v] (or -1). With `max_cardinality`, only maximum-cardinality
/// matchings are considered.
class BlossomMatcher {
 public:
  using Weight = std::int64_t;
  struct Edge {
    int u, v;
    Weight w;
  };

  BlossomMatcher(int n, std::vector<Edge> edges, bool max_cardinality)
      : nv_(n), edges_(std::move(edges)), maxcard_(max_cardinality) {}

  std::vector<int> solve() {
    init();
    if (edges_.empty()) return std::vector<int>(nv_, -1);
    run();
    std::vector<int> out(nv_, -1);
    for (int v = 0; v < nv_; ++v)
      if (mate_[v] >= 0) out[v] = endpoint_[mate_[v]];
    return out;
  }

 private:
  void init() {
    for (const auto& e : edges_) {
      if (e.u < 0 || e.v < 0 || e.u >= nv_ || e.v >= nv_ || e.u == e.v)
        throw std::invalid_argument("BlossomMatcher: bad edge");
    }
    Weight maxw = 0;
    for (const auto& e : edges_) maxw = std::max(maxw, e.w);
    const int ne = static_cast<int>(edges_.size());
    endpoint_.resize(2 * ne);
    for (int p = 0; p < 2 * ne; ++p) endpoint_[p] = p % 2 == 0 ? edges_[p / 2].u : edges_[p / 2].v;
    neighbend_.assign(nv_, {});
    for (int k = 0; k < ne; ++k) {
      neighbend_[edges_[k].u].push_back(2 * k + 1);
      neighbend_[edges_[k].v].push_back(2 * k);
    }
    mate_.assign(nv_, -1);
    label_.assign(2 * nv_, 0);
    labelend_.assign(2 * nv_, -1);
    inblossom_.resize(nv_);
    for (int v = 0; v < nv_; ++v) inblossom_[v] = v;
    parent_.assign(2 * nv_, -1);
    childs_.assign(2 * nv_, {});
    base_.assign(2 * nv_, -1);
    for (int v = 0; v < nv_; ++v) base_[v] = v;
    endps_.assign(2 * nv_, {});
    bestedge_.assign(2 * nv_, -1);
    bestedges_.assign(2 * nv_, std::nullopt);
    unused_.clear();
    for (int b = nv_; b < 2 * nv_; ++b) unused_.push_back(b);
    dual_.assign(2 * nv_, 0);
    for (int v = 0; v < nv_; ++v) dual_[v] = maxw;
    allow_.assign(ne, false);
    queue_.clear();
  }

  Weight slack(int k) const { return dual_[edges_[k].u] + dual_[edges_[k].v] - 2 * edges_[k].w; }

  void leaves(int b, std::vector<int>& out) const {
    if (b < nv_) {
      out.push_back(b);
      return;
    }
    for (int t : childs_[b]) leaves(t, out);
  }

  std::vector<int> leaves(int b) const {
    std::vector<int> out;
    leaves(b, out);
    return out;
  }

  static int wrap(int j, int n) { return ((j % n) + n) % n; }

  void assign_label(int w, int t, int p) {
    const int b = inblossom_[w];
    label_[w] = label_[b] = t;
    labelend_[w] = labelend_[b] = p;
    bestedge_[w] = bestedge_[b] = -1;
    if (t == 1) {
      leaves(b, queue_);
    } else if (t == 2) {
      const int bs = base_[b];
      assign_label(endpoint_[mate_[bs]], 1, mate_[bs] ^ 1);
    }
  }

  int scan_blossom(int v, int w) {
    std::vector<int> path;
    int base = -1;
    while (v != -1 || w != -1) {
      int b = inblossom_[v];
      if (label_[b] & 4) {
        base = base_[b];
        break;
      }
      path.push_back(b);
      label_[b] = 5;
      if (labelend_[b] == -1) {
        v = -1;
      } else {
        v = endpoint_[labelend_[b]];
        b = inblossom_[v];
        v = endpoint_[labelend_[b]];
      }
      if (w != -1) std::swap(v, w);
    }
    for (int b : path) label_[b] = 1;
    return base;
  }

  void add_blossom(int base, int k) {
    int v = edges_[k].u, w = edges_[k].v;
    const int bb = inblossom_[base];
    int bv = inblossom_[v], bw = inblossom_[w];
    const int b = unused_.back();
    unused_.pop_back();
    base_[b] = base;
    parent_[b] = -1;
    parent_[bb] = b;
    std::vector<int> path, endps;
    while (bv != bb) {
      parent_[bv] = b;
      path.push_back(bv);
      endps.push_back(labelend_[bv]);
      v = endpoint_[labelend_[bv]];
      bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      parent_[bw] = b;
      path.push_back(bw);
      endps.push_back(labelend_[bw] ^ 1);
      w = endpoint_[labelend_[bw]];
      bw = inblossom_[w];
    }
    childs_[b] = path;
    endps_[b] = endps;
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dual_[b] = 0;
    for (int x : leaves(b)) {
      if (label_[inblossom_[x]] == 2) queue_.push_back(x);
      inblossom_[x] = b;
    }
    std::vector<int> bestto(2 * nv_, -1);
    for (int c : path) {
      std::vector<std::vector<int>> lists;
      if (!bestedges_[c]) {
        for (int x : leaves(c)) {
          std::vector<int> l;
          for (int p : neighbend_[x]) l.push_back(p / 2);
          lists.push_back(std::move(l));
        }
      } else {
        lists.push_back(*bestedges_[c]);
      }
      for (const auto& l : lists)
        for (int kk : l) {
          int i = edges_[kk].u, j = edges_[kk].v;
          if (inblossom_[j] == b) std::swap(i, j);
          const int bj = inblossom_[j];
          if (bj != b && label_[bj] == 1 && (bestto[bj] == -1 || slack(kk) < slack(bestto[bj]))) bestto[bj] = kk;
        }
      bestedges_[c].reset();
      bestedge_[c] = -1;
    }
    std::vector<int> be;
    for (int kk : bestto)
      if (kk != -1) be.push_back(kk);
    bestedges_[b] = be;
    bestedge_[b] = -1;
    for (int kk : be)
      if (bestedge_[b] == -1 || slack(kk) < slack(bestedge_[b])) bestedge_[b] = kk;
  }

  void expand_blossom(int b, bool endstage) {
    for (int s : childs_[b]) {
      parent_[s] = -1;
      if (s < nv_) {
        inblossom_[s] = s;
      } else if (endstage && dual_[s] == 0) {
        expand_blossom(s, endstage);
      } else {
        for (int x : leaves(s)) inblossom_[x] = s;
      }
    }
    if (!endstage && label_[b] == 2) {
      const int n = static_cast<int>(childs_[b].size());
      const int entry = inblossom_[endpoint_[labelend_[b] ^ 1]];
      int j = static_cast<int>(std::find(childs_[b].begin(), childs_[b].end(), entry) - childs_[b].begin());
      int jstep, trick;
      if (j & 1) {
        j -= n;
        jstep = 1;
        trick = 0;
      } else {
        jstep = -1;
        trick = 1;
      }
      int p = labelend_[b];
      while (j != 0) {
        label_[endpoint_[p ^ 1]] = 0;
        label_[endpoint_[endps_[b][wrap(j - trick, n)] ^ trick ^ 1]] = 0;
        assign_label(endpoint_[p ^ 1], 2, p);
        allow_[endps_[b][wrap(j - trick, n)] / 2] = true;
        j += jstep;
        p = endps_[b][wrap(j - trick, n)] ^ trick;
        allow_[p / 2] = true;
        j += jstep;
      }
      int bv = childs_[b][wrap(j, n)];
      label_[endpoint_[p ^ 1]] = label_[bv] = 2;
      labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
      bestedge_[bv] = -1;
      j += jstep;
      while (childs_[b][wrap(j, n)] != entry) {
        bv = childs_[b][wrap(j, n)];
        if (label_[bv] == 1) {
          j += jstep;
          continue;
        }
        int found = -1;
        for (int x : leaves(bv))
          if (label_[x] != 0) {
            found = x;
            break;
          }
        if (found >= 0) {
          label_[found] = 0;
          label_[endpoint_[mate_[base_[bv]]]] = 0;
          assign_label(found, 2, labelend_[found]);
        }
        j += jstep;
      }
    }
    label_[b] = labelend_[b] = -1;
    childs_[b].clear();
    endps_[b].clear();
    base_[b] = -1;
    bestedges_[b].reset();
    bestedge_[b] = -1;
    unused_.push_back(b);
  }

  void augment_blossom(int b, int v) {
    int t = v;
    while (parent_[t] != b) t = parent_[t];
    if (t >= nv_) augment_blossom(t, v);
    const int n = static_cast<int>(childs_[b].size());
    const int i = static_cast<int>(std::find(childs_[b].begin(), childs_[b].end(), t) - childs_[b].begin());
    int j = i, jstep, trick;
    if (i & 1) {
      j -= n;
      jstep = 1;
      trick = 0;
    } else {
      jstep = -1;
      trick = 1;
    }
    while (j != 0) {
      j += jstep;
      t = childs_[b][wrap(j, n)];
      const int p = endps_[b][wrap(j - trick, n)] ^ trick;
      if (t >= nv_) augment_blossom(t, endpoint_[p]);
      j += jstep;
      t = childs_[b][wrap(j, n)];
      if (t >= nv_) augment_blossom(t, endpoint_[p ^ 1]);
      mate_[endpoint_[p]] = p ^ 1;
      mate_[endpoint_[p ^ 1]] = p;
    }
    std::rotate(childs_[b].begin(), childs_[b].begin() + i, childs_[b].end());
    std::rotate(endps_[b].begin(), endps_[b].begin() + i, endps_[b].end());
    base_[b] = base_[childs_[b][0]];
  }

  void augment_matching(int k) {
    const int v = edges_[k].u, w = edges_[k].v;
    for (auto [s, p] : {std::pair{v, 2 * k + 1}, std::pair{w, 2 * k}}) {
      while (true) {
        const int bs = inblossom_[s];
        if (bs >= nv_) augment_blossom(bs, s);
        mate_[s] = p;
        if (labelend_[bs] == -1) break;
        const int t = endpoint_[labelend_[bs]];
        const int bt = inblossom_[t];
        s = endpoint_[labelend_[bt]];
        const int j = endpoint_[labelend_[bt] ^ 1];
        if (bt >= nv_) augment_blossom(bt, j);
        mate_[j] = labelend_[bt];
        p = labelend_[bt] ^ 1;
      }
    }
  }

  void run() {
    const int ne = static_cast<int>(edges_.size());
    for (int stage = 0; stage < nv_; ++stage) {
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(bestedge_.begin(), bestedge_.end(), -1);
      for (int b = nv_; b < 2 * nv_; ++b) bestedges_[b].reset();
      std::fill(allow_.begin(), allow_.end(), false);
      queue_.clear();
      for (int v = 0; v < nv_; ++v)
        if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
      bool augmented = false;
      while (true) {
        while (!queue_.empty() && !augmented) {
          const int v = queue_.back();
          queue_.pop_back();
          for (int p : neighbend_[v]) {
            const int k = p / 2;
            const int w = endpoint_[p];
            if (inblossom_[v] == inblossom_[w]) continue;
            Weight kslack = 0;
            if (!allow_[k]) {
              kslack = slack(k);
              if (kslack <= 0) allow_[k] = true;
            }
            if (allow_[k]) {
              if (label_[inblossom_[w]] == 0) {
                assign_label(w, 2, p ^ 1);
              } else if (label_[inblossom_[w]] == 1) {
                const int base = scan_blossom(v, w);
                if (base >= 0) {
                  add_blossom(base, k);
                } else {
                  augment_matching(k);
                  augmented = true;
                  break;
                }
              } else if (label_[w] == 0) {
                label_[w] = 2;
                labelend_[w] = p ^ 1;
              }
            } else if (label_[inblossom_[w]] == 1) {
              const int b = inblossom_[v];
              if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
            } else if (label_[w] == 0) {
              if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
            }
          }
        }
        if (augmented) break;

        int dtype = -1, dedge = -1, dblossom = -1;
        Weight delta = 0;
        if (!maxcard_) {
          dtype = 1;
          delta = *std::min_element(dual_.begin(), dual_.begin() + nv_);
        }
        for (int v = 0; v < nv_; ++v)
          if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
            const Weight d = slack(bestedge_[v]);
            if (dtype == -1 || d < delta) {
              delta = d;
              dtype = 2;
              dedge = bestedge_[v];
            }
          }
        for (int b = 0; b < 2 * nv_; ++b)
          if (parent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
            const Weight d = slack(bestedge_[b]) / 2;
            if (dtype == -1 || d < delta) {
              delta = d;
              dtype = 3;
              dedge = bestedge_[b];
            }
          }
        for (int b = nv_; b < 2 * nv_; ++b)
          if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 && (dtype == -1 || dual_[b] < delta)) {
            delta = dual_[b];
            dtype = 4;
            dblossom = b;
          }
        if (dtype == -1) {
          dtype = 1;
          delta = std::max<Weight>(0, *std::min_element(dual_.begin(), dual_.begin() + nv_));
        }
        for (int v = 0; v < nv_; ++v) {
          if (label_[inblossom_[v]] == 1)
            dual_[v] -= delta;
          else if (label_[inblossom_[v]] == 2)
            dual_[v] += delta;
        }
        for (int b = nv_; b < 2 * nv_; ++b)
          if (base_[b] >= 0 && parent_[b] == -1) {
            if (label_[b] == 1)
              dual_[b] += delta;
            else if (label_[b] == 2)
              dual_[b] -= delta;
          }
        if (dtype == 1) break;
        if (dtype == 2) {
          allow_[dedge] = true;
          int i = edges_[dedge].u, j = edges_[dedge].v;
          if (label_[inblossom_[i]] == 0) std::swap(i, j);
          queue_.push_back(i);
        } else if (dtype == 3) {
          allow_[dedge] = true;
          queue_.push_back(edges_[dedge].u);
        } else if (dtype == 4) {
          expand_blossom(dblossom, false);
        }
      }
      if (!augmented) break;
      for (int b = nv_; b < 2 * nv_; ++b)
        if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) expand_blossom(b, true);
    }
    (void)ne;
  }

  int nv_;
  std::vector<Edge> edges_;
  bool maxcard_;
  std::vector<int> endpoint_;
  std::vector<std::vector<int>> neighbend_;
  std::vector<int> mate_, label_, labelend_, inblossom_, parent_, base_, bestedge_, unused_, queue_;
  std::vector<std::vector<int>> childs_, endps_;
  std::vector<std::optional<std::vector<int>>> bestedges_;
  std::vector<Weight> dual_;
  std::vector<bool> allow_;
};

inline std::vector<int> max_weight_matching(int n, std::vector<BlossomMatcher::Edge> edges,
                                            bool max_cardinality = false) {
  return BlossomMatcher(n, std::move(edges), max_cardinality).solve();
}

}  // namespace catgates
