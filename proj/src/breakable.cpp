#include "volray/breakable.hpp"

#include <algorithm>
#include <cmath>

#include "volray/error.hpp"
#include "volray/segrender.hpp"

namespace volray::breakable {

std::vector<Packet> evaluate_segments(const Spec& spec, std::span<const SampleInterval> samples,
                                      std::span<const std::size_t> cuts) {
  std::vector<Packet> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const std::size_t end = i < cuts.size() ? cuts[i] : samples.size();
    if (end < begin || end > samples.size()) {
      throw Error(ErrorKind::InvalidArgument, "cuts must be increasing sample indices");
    }
    out.push_back(spec.evaluate(samples.subspan(begin, end - begin)));
    begin = end;
  }
  return out;
}

Value fold(const Spec& spec, std::span<const Packet> ordered) {
  Value value = spec.identity_value;
  State state = spec.identity_state;
  for (const Packet& p : ordered) {
    Step step = spec.combine(state, p);
    for (std::size_t i = 0; i < value.size(); ++i) value[i] += step.contribution[i];
    state = std::move(step.next);
  }
  return value;
}

bool check_split_invariance(const Spec& spec, std::span<const SampleInterval> shaded,
                            std::span<const std::size_t> cuts) {
  const std::vector<Packet> whole_packets = evaluate_segments(spec, shaded, {});
  const std::vector<Packet> cut_packets = evaluate_segments(spec, shaded, cuts);
  const Value whole = fold(spec, whole_packets);
  const Value split = fold(spec, cut_packets);
  if (whole.size() != split.size()) return false;
  for (std::size_t i = 0; i < whole.size(); ++i) {
    const double scale = std::max(1.0, std::abs(whole[i]));
    if (!(std::abs(whole[i] - split[i]) <= kSplitTolerance * scale)) return false;
  }
  return true;
}

namespace {

// Every instance reads the same per-segment aggregate; packets carry only what
// the instance needs.
SegmentAggregate local(std::span<const SampleInterval> s) { return aggregate_samples(s); }

}  // namespace

Spec transmittance() {
  // Sum-of-products form: T = 1 + sum_k T_prefix,k * (T_k - 1), which telescopes to prod T_k.
  return Spec{
      "transmittance",
      [](std::span<const SampleInterval> s) { return Packet{local(s).transmittance}; },
      State{1.0},
      Value{1.0},
      [](const State& st, const Packet& p) {
        return Step{Value{st[0] * (p[0] - 1.0)}, State{st[0] * p[0]}};
      },
  };
}

Spec color() {
  return Spec{
      "color",
      [](std::span<const SampleInterval> s) {
        const SegmentAggregate a = local(s);
        return Packet{a.transmittance, a.color.r, a.color.g, a.color.b};
      },
      State{1.0},
      Value{0.0, 0.0, 0.0},
      [](const State& st, const Packet& p) {
        return Step{Value{st[0] * p[1], st[0] * p[2], st[0] * p[3]}, State{st[0] * p[0]}};
      },
  };
}

Spec weight() {
  return Spec{
      "weight",
      [](std::span<const SampleInterval> s) {
        const SegmentAggregate a = local(s);
        return Packet{a.transmittance, a.alpha};
      },
      State{1.0},
      Value{0.0},
      [](const State& st, const Packet& p) { return Step{Value{st[0] * p[1]}, State{st[0] * p[0]}}; },
  };
}

Spec depth() {
  return Spec{
      "depth",
      [](std::span<const SampleInterval> s) {
        const SegmentAggregate a = local(s);
        return Packet{a.transmittance, a.depth};
      },
      State{1.0},
      Value{0.0},
      [](const State& st, const Packet& p) { return Step{Value{st[0] * p[1]}, State{st[0] * p[0]}}; },
  };
}

Spec distortion() {
  // State (T_prefix, A_prefix, D_prefix) is sufficient for the cross term.
  return Spec{
      "distortion",
      [](std::span<const SampleInterval> s) {
        const SegmentAggregate a = local(s);
        return Packet{a.transmittance, a.alpha, a.depth, a.distortion};
      },
      State{1.0, 0.0, 0.0},
      Value{0.0},
      [](const State& st, const Packet& p) {
        const double t = st[0];
        const double cross = p[2] * st[1] - p[1] * st[2];
        return Step{Value{t * t * p[3] + 2.0 * t * cross},
                    State{t * p[0], st[1] + t * p[1], st[2] + t * p[2]}};
      },
  };
}

namespace {

Packet concat(const Packet& a, const Packet& b) {
  Packet out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Combined state layout: [state_a | state_b | running value_a | running value_b].
struct Layout {
  std::size_t sa, sb, va, vb;
};

// Packet layout for the combinators: [width_a | packet_a | packet_b].
Packet tagged(const Packet& a, const Packet& b) {
  Packet out;
  out.reserve(1 + a.size() + b.size());
  out.push_back(static_cast<double>(a.size()));
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::pair<Packet, Packet> untag(const Packet& p) {
  const auto width = static_cast<std::ptrdiff_t>(p.at(0));
  return {Packet(p.begin() + 1, p.begin() + 1 + width), Packet(p.begin() + 1 + width, p.end())};
}

}  // namespace

Spec product(const Spec& a, const Spec& b) {
  if (a.identity_value.size() != b.identity_value.size()) {
    throw Error(ErrorKind::InvalidArgument, "product needs instances of equal value width");
  }
  const Layout l{a.identity_state.size(), b.identity_state.size(), a.identity_value.size(),
                 b.identity_value.size()};
  State init = concat(concat(a.identity_state, b.identity_state), concat(a.identity_value, b.identity_value));
  Value id(l.va);
  for (std::size_t i = 0; i < l.va; ++i) id[i] = a.identity_value[i] * b.identity_value[i];

  return Spec{
      a.name + "*" + b.name,
      [a, b](std::span<const SampleInterval> s) { return tagged(a.evaluate(s), b.evaluate(s)); },
      std::move(init),
      std::move(id),
      [a, b, l](const State& st, const Packet& p) {
        const auto [pa, pb] = untag(p);
        const State sa(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(l.sa));
        const State sb(st.begin() + static_cast<std::ptrdiff_t>(l.sa),
                       st.begin() + static_cast<std::ptrdiff_t>(l.sa + l.sb));
        const auto va_begin = st.begin() + static_cast<std::ptrdiff_t>(l.sa + l.sb);
        const Value va(va_begin, va_begin + static_cast<std::ptrdiff_t>(l.va));
        const Value vb(va_begin + static_cast<std::ptrdiff_t>(l.va), st.end());
        Step step_a = a.combine(sa, pa);
        Step step_b = b.combine(sb, pb);
        Value na = va;
        Value nb = vb;
        Value contribution(l.va);
        for (std::size_t i = 0; i < l.va; ++i) {
          na[i] += step_a.contribution[i];
          nb[i] += step_b.contribution[i];
          contribution[i] = na[i] * nb[i] - va[i] * vb[i];
        }
        return Step{std::move(contribution),
                    concat(concat(step_a.next, step_b.next), concat(na, nb))};
      },
  };
}

Spec sum(const Spec& a, const Spec& b) {
  if (a.identity_value.size() != b.identity_value.size()) {
    throw Error(ErrorKind::InvalidArgument, "sum needs instances of equal value width");
  }
  const std::size_t sa = a.identity_state.size();
  Value id(a.identity_value.size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = a.identity_value[i] + b.identity_value[i];
  return Spec{
      a.name + "+" + b.name,
      [a, b](std::span<const SampleInterval> s) { return tagged(a.evaluate(s), b.evaluate(s)); },
      concat(a.identity_state, b.identity_state),
      std::move(id),
      [a, b, sa](const State& st, const Packet& p) {
        const auto [pa, pb] = untag(p);
        Step step_a = a.combine(State(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(sa)), pa);
        Step step_b = b.combine(State(st.begin() + static_cast<std::ptrdiff_t>(sa), st.end()), pb);
        Value contribution(step_a.contribution.size());
        for (std::size_t i = 0; i < contribution.size(); ++i) {
          contribution[i] = step_a.contribution[i] + step_b.contribution[i];
        }
        return Step{std::move(contribution), concat(step_a.next, step_b.next)};
      },
  };
}

}  // namespace volray::breakable
