#include <algorithm>
#include <cmath>
#include <cstring>

#include "lungct/binning.hpp"
#include "model_common.hpp"

namespace lungct {
namespace {

using detail::BinnedFeatures;
using detail::sigmoid;
using detail::Tree;

class GbtModel final : public Model {
 public:
  GbtModel(double base, std::vector<Tree> trees, std::vector<double> losses,
           int max_depth, int n_rounds, double learning_rate)
      : base_(base),
        trees_(std::move(trees)),
        losses_(std::move(losses)),
        max_depth_(max_depth),
        n_rounds_(n_rounds),
        learning_rate_(learning_rate) {}

  double raw(const std::vector<double>& x) const {
    double f = base_;
    for (const auto& t : trees_) f += t.predict(x);
    return f;
  }

  double score(const std::vector<double>& x) const override {
    return sigmoid(raw(x));
  }

  nlohmann::json dump() const override {
    return {{"family", "gbt"},
            {"hyperparams",
             {{"max_depth", max_depth_},
              {"n_rounds", n_rounds_},
              {"learning_rate", learning_rate_}}},
            {"params", {{"base", base_}, {"n_trees", trees_.size()}}}};
  }

  const std::vector<double>& loss_trace() const { return losses_; }

 private:
  double base_;
  std::vector<Tree> trees_;  // leaf values already scaled by learning rate
  std::vector<double> losses_;
  int max_depth_;
  int n_rounds_;
  double learning_rate_;
};

struct GbtBuilder {
  const BinnedFeatures& bins;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  int max_depth;
  double learning_rate;
  Tree tree;
  std::vector<double>& raw_update;  // per training row, filled at leaves
  // Rows live physically in node order: order, gnode and cnode are permuted
  // together at every partition, so split search and histogram accumulation
  // read sequential memory with no indirection.
  std::vector<std::size_t> order;      // original row ids
  std::vector<double> gnode;           // gradients
  std::vector<std::uint8_t> cnode;     // bin codes, d bytes per row
  std::vector<std::size_t> scratch;
  std::vector<double> gscratch;
  std::vector<std::uint8_t> cscratch;
  std::vector<std::uint8_t> cscratch2;
  std::vector<std::uint8_t> codes_rm;  // pristine row-major codes
  // Per-feature row lists sorted by bin code, partitioned alongside the
  // node spans so every node's segment stays sorted.
  std::vector<std::uint32_t> worder;   // d segments of nrows entries
  std::vector<std::uint32_t> wscratch;
  std::size_t nrows = 0;

  // Below this row count split search sorts the rows by bin code instead of
  // filling a full histogram; both paths pick the identical split.
  static constexpr std::size_t kSparseCutoff = 32;

  std::vector<double> inv;  // inv[k] = 1.0 / k, avoids divisions per bin

  // Per-bin gradient/count histograms, two per tree level (one per child),
  // each a d x 64 block. A node accumulates the histogram of its smaller
  // child only; the larger child's is the parent's minus the smaller's.
  static constexpr std::size_t kHistBins = 64;
  std::vector<double> hg;
  std::vector<std::uint16_t> hc;
  std::size_t hstride = 0;  // d * kHistBins

  std::size_t hist_off(int depth, int which) const {
    return (static_cast<std::size_t>(depth) * 2 + which) * hstride;
  }

  void accumulate_hist(std::size_t lo, std::size_t hi, double* g,
                       std::uint16_t* c) {
    const std::size_t d = bins.cuts.size();
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t nb = bins.n_bins(f);
      std::fill_n(g + f * kHistBins, nb, 0.0);
      std::fill_n(c + f * kHistBins, nb, std::uint16_t{0});
    }
    for (std::size_t k = lo; k < hi; ++k) {
      const double gi = gnode[k];
      const std::uint8_t* src = cnode.data() + k * d;
      for (std::size_t f = 0; f < d; ++f) {
        g[f * kHistBins + src[f]] += gi;
        ++c[f * kHistBins + src[f]];
      }
    }
  }

  // Row buffers carry 16 bytes of slack so narrow rows move as one fixed
  // block; overlapping spill bytes are rewritten by the following rows.
  static void copy_row(std::uint8_t* dst, const std::uint8_t* src,
                       std::size_t d) {
    if (d <= 16)
      std::memcpy(dst, src, 16);
    else
      std::memcpy(dst, src, d);
  }

  void subtract_hist(const double* pg, const std::uint16_t* pc,
                     const double* sg, const std::uint16_t* sc, double* g,
                     std::uint16_t* c) {
    const std::size_t d = bins.cuts.size();
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t nb = bins.n_bins(f);
      for (std::size_t b = f * kHistBins; b < f * kHistBins + nb; ++b) {
        g[b] = pg[b] - sg[b];
        c[b] = static_cast<std::uint16_t>(pc[b] - sc[b]);
      }
    }
  }

  // Considers the running left prefix (gl, ml) as a candidate split at bin b
  // against the best seen so far. Strictly-greater keeps the first feature
  // and lowest bin on ties.
  struct BestSplit {
    const double* inv;
    double gain = 1e-12;
    int feature = -1;
    int bin = -1;
    std::size_t nl = 0;  // rows on the left of the winning split

    void offer(double gl, std::size_t ml, double gsum, std::size_t m,
               double base_score, std::size_t f, int b) {
      const double gr = gsum - gl;
      const std::size_t mr = m - ml;
      const double g =
          gl * gl * inv[ml] + gr * gr * inv[mr] - base_score;
      if (g > gain) {
        gain = g;
        feature = static_cast<int>(f);
        bin = b;
        nl = ml;
      }
    }
  };

  int build(std::size_t lo, std::size_t hi, int depth, const double* pg,
            const std::uint16_t* pc, bool wvalid) {
    const std::size_t m = hi - lo;
    const std::size_t d = bins.cuts.size();
    double gsum = 0.0;
    const double* gn = gnode.data() + lo;
    for (std::size_t k = 0; k < m; ++k) gsum += gn[k];
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    BestSplit best{inv.data()};
    if (depth < max_depth && m >= 2) {
      // Least-squares gain on the gradients.
      const double base_score = gsum * gsum * inv[m];
      if (m >= kSparseCutoff) {
        if (!pg) {
          // Only the root lands here; every other histogram node inherits
          // from its parent.
          double* og = hg.data() + hist_off(depth, 0);
          std::uint16_t* oc = hc.data() + hist_off(depth, 0);
          accumulate_hist(lo, hi, og, oc);
          pg = og;
          pc = oc;
        }
        for (std::size_t f = 0; f < d; ++f) {
          const int nb = bins.n_bins(f);
          if (nb < 2) continue;
          const double* gb = pg + f * kHistBins;
          const std::uint16_t* cb = pc + f * kHistBins;
          double gl = 0.0;
          std::size_t ml = 0;
          // Empty bins leave (gl, ml) unchanged and can never beat the
          // strictly-greater comparison, so they are skipped outright.
          for (int b = 0; b + 1 < nb; ++b) {
            if (cb[b] == 0) continue;
            gl += gb[b];
            ml += cb[b];
            if (ml == m) break;
            best.offer(gl, ml, gsum, m, base_score, f, b);
          }
        }
      } else if (m == 2) {
        // A two-row node splits 1|1 on any feature whose codes differ; the
        // candidate is offered exactly as the scan paths would see it.
        const std::uint8_t* r0 = cnode.data() + lo * d;
        const std::uint8_t* r1 = r0 + d;
        for (std::size_t f = 0; f < d; ++f) {
          if (r0[f] == r1[f] || bins.n_bins(f) < 2) continue;
          const double gl = r0[f] < r1[f] ? gn[0] : gn[1];
          best.offer(gl, 1, gsum, 2, base_score, f, std::min(r0[f], r1[f]));
        }
      } else if (wvalid) {
        // worder keeps this node's rows pre-sorted by bin code per feature
        // (original row order within a code), so the scan needs no sort;
        // the per-code group sums match the histogram path bit for bit.
        for (std::size_t f = 0; f < d; ++f) {
          if (bins.n_bins(f) < 2) continue;
          const std::uint32_t* w = worder.data() + f * nrows + lo;
          const std::uint8_t* cf = bins.codes[f].data();
          double gl = 0.0;
          std::size_t ml = 0;
          std::size_t k = 0;
          while (k < m) {
            const std::uint8_t code = cf[w[k]];
            double gcode = 0.0;
            std::size_t ccode = 0;
            for (; k < m && cf[w[k]] == code; ++k) {
              gcode += grad[w[k]];
              ++ccode;
            }
            gl += gcode;
            ml += ccode;
            if (ml == m) break;
            best.offer(gl, ml, gsum, m, base_score, f, code);
          }
        }
      } else {
        // First small node below the histogram regime: rows packed as
        // (code << 5 | slot) in a uint16 and insertion-sorted, which is
        // stable, then the order is published to worder so descendants
        // inherit it instead of re-sorting.
        static_assert(kSparseCutoff <= 32);
        const bool fill = depth + 1 < max_depth;
        std::uint16_t keys[kSparseCutoff];
        for (std::size_t f = 0; f < d; ++f) {
          if (bins.n_bins(f) < 2) continue;
          const std::uint8_t* basec = cnode.data() + lo * d + f;
          for (std::size_t k = 0; k < m; ++k)
            keys[k] = static_cast<std::uint16_t>(basec[k * d] << 5 | k);
          for (std::size_t k = 1; k < m; ++k) {
            const std::uint16_t key = keys[k];
            std::size_t j = k;
            for (; j > 0 && keys[j - 1] > key; --j) keys[j] = keys[j - 1];
            keys[j] = key;
          }
          if (fill) {
            std::uint32_t* w = worder.data() + f * nrows + lo;
            for (std::size_t k = 0; k < m; ++k)
              w[k] = static_cast<std::uint32_t>(order[lo + (keys[k] & 31)]);
          }
          double gl = 0.0;
          std::size_t ml = 0;
          std::size_t k = 0;
          while (k < m) {
            const std::uint16_t code = keys[k] >> 5;
            double gcode = 0.0;
            std::size_t ccode = 0;
            for (; k < m && (keys[k] >> 5) == code; ++k) {
              gcode += gn[keys[k] & 31];
              ++ccode;
            }
            gl += gcode;
            ml += ccode;
            if (ml == m) break;
            best.offer(gl, ml, gsum, m, base_score, f, code);
          }
        }
      }
    }

    if (best.feature < 0) {
      // Newton leaf with unit L2 damping.
      double hsum = 0.0;
      for (std::size_t k = lo; k < hi; ++k) hsum += hess[order[k]];
      const double value = learning_rate * gsum / (hsum + 1.0);
      tree.nodes[node_id].value = value;
      for (std::size_t k = lo; k < hi; ++k) raw_update[order[k]] = value;
      return node_id;
    }

    // Stable in-place partition via the scratch buffers: left rows keep
    // their order, then right rows. order, gnode and cnode move together;
    // the split search already counted the left rows, so one pass writes
    // both sides. Code rows go through per-side buffers because copy_row
    // spills past the row, which is only safe for sequential writes.
    const std::size_t nl = best.nl;
    const std::uint8_t* col =
        cnode.data() + lo * d + static_cast<std::size_t>(best.feature);
    std::size_t li = 0, ri = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (col[k * d] <= best.bin) {
        scratch[li] = order[lo + k];
        gscratch[li] = gnode[lo + k];
        copy_row(cscratch.data() + li * d, cnode.data() + (lo + k) * d, d);
        ++li;
      } else {
        scratch[nl + ri] = order[lo + k];
        gscratch[nl + ri] = gnode[lo + k];
        copy_row(cscratch2.data() + ri * d, cnode.data() + (lo + k) * d, d);
        ++ri;
      }
    }
    bool child_wvalid = false;
    if (m > 2 && m < kSparseCutoff && depth + 1 < max_depth) {
      // Keep the per-feature sorted lists aligned with the new spans; with
      // nl known, one pass writes both sides stably.
      child_wvalid = true;
      const std::uint8_t* cb =
          bins.codes[static_cast<std::size_t>(best.feature)].data();
      for (std::size_t f = 0; f < d; ++f) {
        if (bins.n_bins(f) < 2) continue;
        std::uint32_t* w = worder.data() + f * nrows + lo;
        std::size_t li = 0, ri = nl;
        for (std::size_t k = 0; k < m; ++k) {
          const std::uint32_t row = w[k];
          if (cb[row] <= best.bin)
            wscratch[li++] = row;
          else
            wscratch[ri++] = row;
        }
        std::copy(wscratch.begin(), wscratch.begin() + m, w);
      }
    }
    std::copy(scratch.begin(), scratch.begin() + m, order.begin() + lo);
    std::copy(gscratch.begin(), gscratch.begin() + m, gnode.begin() + lo);
    std::memcpy(cnode.data() + lo * d, cscratch.data(), nl * d);
    std::memcpy(cnode.data() + (lo + nl) * d, cscratch2.data(), (m - nl) * d);

    const std::size_t nr = m - nl;
    const double* lg = nullptr;
    const std::uint16_t* lc = nullptr;
    const double* rg = nullptr;
    const std::uint16_t* rc = nullptr;
    if (pg && depth + 1 < max_depth && std::max(nl, nr) >= kSparseCutoff) {
      double* sg = hg.data() + hist_off(depth + 1, 0);
      std::uint16_t* sc = hc.data() + hist_off(depth + 1, 0);
      double* bg = hg.data() + hist_off(depth + 1, 1);
      std::uint16_t* bc = hc.data() + hist_off(depth + 1, 1);
      if (nl <= nr) {
        accumulate_hist(lo, lo + nl, sg, sc);
        subtract_hist(pg, pc, sg, sc, bg, bc);
        lg = sg, lc = sc, rg = bg, rc = bc;
      } else {
        accumulate_hist(lo + nl, hi, sg, sc);
        subtract_hist(pg, pc, sg, sc, bg, bc);
        rg = sg, rc = sc, lg = bg, lc = bc;
      }
    }

    const int l = build(lo, lo + nl, depth + 1, lg, lc, child_wvalid);
    const int r = build(lo + nl, hi, depth + 1, rg, rc, child_wvalid);
    tree.nodes[node_id].feature = best.feature;
    tree.nodes[node_id].threshold = bins.cuts[best.feature][best.bin];
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

}  // namespace

// Gradient boosting with logistic loss: each round fits a depth-limited
// regression tree to the negative gradients and assigns leaves a damped
// Newton step, scaled by the learning rate.
std::unique_ptr<Model> fit_gbt(const Dataset& data, int max_depth,
                               int n_rounds, double learning_rate) {
  detail::check_trainable(data);
  if (max_depth < 1 || n_rounds < 1 || learning_rate <= 0)
    throw ArgumentError("fit_gbt: bad hyperparameters");
  const std::size_t n = data.n_rows();
  const BinnedFeatures bins = detail::bin_features(data.X, 64);

  const double p0 =
      static_cast<double>(data.count_label(1)) / static_cast<double>(n);
  const double base = std::log(p0 / (1.0 - p0));

  std::vector<double> raw(n, base), grad(n), hess(n), raw_update(n);
  auto mean_logloss = [&]() {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = data.y[i] ? raw[i] : -raw[i];
      loss += m >= 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    }
    return loss / static_cast<double>(n);
  };

  std::vector<Tree> trees;
  trees.reserve(n_rounds);
  std::vector<double> losses;
  losses.reserve(n_rounds + 1);

  GbtBuilder builder{bins, grad, hess, max_depth, learning_rate, Tree{},
                     raw_update};
  builder.order.resize(n);
  builder.scratch.resize(n);
  builder.gnode.resize(n);
  builder.gscratch.resize(n);
  builder.inv.resize(n + 1);
  for (std::size_t k = 1; k <= n; ++k)
    builder.inv[k] = 1.0 / static_cast<double>(k);
  const std::size_t d = bins.cuts.size();
  builder.codes_rm.resize(n * d);
  for (std::size_t f = 0; f < d; ++f)
    for (std::size_t i = 0; i < n; ++i)
      builder.codes_rm[i * d + f] = bins.codes[f][i];
  builder.cnode.resize(n * d + 16);
  builder.cscratch.resize(n * d + 16);
  builder.cscratch2.resize(n * d + 16);
  builder.nrows = n;
  builder.worder.resize(n * d);
  builder.wscratch.resize(n);
  std::vector<std::uint32_t> worder0(n * d);
  for (std::size_t f = 0; f < d; ++f) {
    std::uint32_t* w = worder0.data() + f * n;
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<std::uint32_t>(i);
    if (bins.n_bins(f) < 2) continue;
    const std::uint8_t* cf = bins.codes[f].data();
    std::stable_sort(w, w + n, [cf](std::uint32_t a, std::uint32_t b) {
      return cf[a] < cf[b];
    });
  }
  builder.hstride = d * GbtBuilder::kHistBins;
  builder.hg.resize(builder.hist_off(max_depth + 1, 0));
  builder.hc.resize(builder.hist_off(max_depth + 1, 0));

  for (int round = 0; round < n_rounds; ++round) {
    // One pass produces the gradients and the log-loss of the model built
    // so far; the loss expressions match mean_logloss() branch for branch,
    // sharing the sigmoid's exponential.
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = raw[i];
      double p;
      if (t >= 0) {
        const double e = std::exp(-t);
        p = 1.0 / (1.0 + e);
        loss += data.y[i] ? std::log1p(e) : t + std::log1p(e);
      } else {
        const double e = std::exp(t);
        p = e / (1.0 + e);
        loss += data.y[i] ? -t + std::log1p(e) : std::log1p(e);
      }
      grad[i] = static_cast<double>(data.y[i]) - p;
      hess[i] = p * (1.0 - p);
    }
    losses.push_back(loss / static_cast<double>(n));
    builder.tree = Tree{};
    builder.tree.nodes.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) builder.order[i] = i;
    std::copy(grad.begin(), grad.end(), builder.gnode.begin());
    std::copy(builder.codes_rm.begin(), builder.codes_rm.end(),
              builder.cnode.begin());
    std::copy(worder0.begin(), worder0.end(), builder.worder.begin());
    builder.build(0, n, 0, nullptr, nullptr, false);
    for (std::size_t i = 0; i < n; ++i) raw[i] += raw_update[i];
    trees.push_back(std::move(builder.tree));
  }
  losses.push_back(mean_logloss());

  return std::make_unique<GbtModel>(base, std::move(trees), std::move(losses),
                                    max_depth, n_rounds, learning_rate);
}

double gbt_raw_prediction(const Model& model, const std::vector<double>& x) {
  const auto* m = dynamic_cast<const GbtModel*>(&model);
  if (!m) throw StateError("gbt_raw_prediction: not a gbt model");
  return m->raw(x);
}

std::vector<double> gbt_loss_trace(const Model& model) {
  const auto* m = dynamic_cast<const GbtModel*>(&model);
  if (!m) throw StateError("gbt_loss_trace: not a gbt model");
  return m->loss_trace();
}

}  // namespace lungct
