#include "qconf/state_vector.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qconf {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

const char* basis_name(Basis b) {
  switch (b) {
    case Basis::Z: return "Z";
    case Basis::X: return "X";
    case Basis::Y: return "Y";
  }
  return "?";
}

Basis basis_from_name(std::string_view name) {
  if (name == "Z" || name == "z") return Basis::Z;
  if (name == "X" || name == "x") return Basis::X;
  if (name == "Y" || name == "y") return Basis::Y;
  throw std::invalid_argument("unknown basis name: " + std::string(name));
}

std::array<std::array<Amplitude, 2>, 2> basis_eigenvectors(Basis b) {
  switch (b) {
    case Basis::Z:
      return {{{Amplitude{1, 0}, Amplitude{0, 0}}, {Amplitude{0, 0}, Amplitude{1, 0}}}};
    case Basis::X:
      return {{{Amplitude{kInvSqrt2, 0}, Amplitude{kInvSqrt2, 0}},
               {Amplitude{kInvSqrt2, 0}, Amplitude{-kInvSqrt2, 0}}}};
    case Basis::Y:
      return {{{Amplitude{kInvSqrt2, 0}, Amplitude{0, kInvSqrt2}},
               {Amplitude{kInvSqrt2, 0}, Amplitude{0, -kInvSqrt2}}}};
  }
  throw std::logic_error("unreachable basis");
}

bool DensityMatrix2::is_hermitian(double tol) const {
  if (std::abs(entries[0][0].imag()) > tol) return false;
  if (std::abs(entries[1][1].imag()) > tol) return false;
  return std::abs(entries[0][1] - std::conj(entries[1][0])) <= tol;
}

std::pair<double, double> DensityMatrix2::eigenvalues() const {
  const double a = entries[0][0].real();
  const double d = entries[1][1].real();
  const double off = std::abs(entries[0][1]);
  const double mid = 0.5 * (a + d);
  const double radius = std::sqrt(0.25 * (a - d) * (a - d) + off * off);
  return {mid + radius, mid - radius};
}

double DensityMatrix2::purity() const {
  double sum = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) sum += std::norm(entries[r][c]);
  return sum;
}

double DensityMatrix2::max_abs_diff(const DensityMatrix2& other) const {
  double worst = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      worst = std::max(worst, std::abs(entries[r][c] - other.entries[r][c]));
  return worst;
}

DensityMatrix2 DensityMatrix2::maximally_mixed() {
  DensityMatrix2 m;
  m.entries[0][0] = Amplitude{0.5, 0};
  m.entries[1][1] = Amplitude{0.5, 0};
  return m;
}

StateVector::StateVector(std::vector<QubitLabel> labels, std::vector<Amplitude> amplitudes)
    : labels_(std::move(labels)), amplitudes_(std::move(amplitudes)) {
  validate();
}

void StateVector::validate() const {
  const std::size_t expected = std::size_t{1} << labels_.size();
  if (amplitudes_.size() != expected)
    throw std::invalid_argument("StateVector: amplitude count must be 2^n");
  std::set<QubitLabel> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size())
    throw std::invalid_argument("StateVector: duplicate qubit label");
  for (const Amplitude& a : amplitudes_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw std::invalid_argument("StateVector: non-finite amplitude");
  }
  if (std::abs(norm_squared() - 1.0) > kStateTol)
    throw std::invalid_argument("StateVector: state is not normalized");
}

bool StateVector::has_qubit(const QubitLabel& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

int StateVector::position_of(const QubitLabel& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw std::invalid_argument("StateVector: unknown qubit label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

double StateVector::norm_squared() const {
  double sum = 0.0;
  for (const Amplitude& a : amplitudes_) sum += std::norm(a);
  return sum;
}

bool StateVector::same_label_set(const StateVector& other) const {
  if (labels_.size() != other.labels_.size()) return false;
  std::vector<QubitLabel> a = labels_, b = other.labels_;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

QubitLabel conferee_label(int index) {
  // 'T' would collide with the traveling qubit, so the count is capped well
  // below that letter; registers this large are out of scope anyway.
  if (index < 0 || index >= 18)
    throw std::invalid_argument("conferee_label: index out of supported range");
  return QubitLabel(1, static_cast<char>('A' + index));
}

StateVector make_ghz(int parties) {
  if (parties < 1) throw std::invalid_argument("make_ghz: need at least one party");
  std::vector<QubitLabel> labels;
  labels.reserve(parties);
  for (int i = 0; i < parties; ++i) labels.push_back(conferee_label(i));
  std::vector<Amplitude> amps(std::size_t{1} << parties, Amplitude{0, 0});
  amps.front() = Amplitude{kInvSqrt2, 0};
  amps.back() = Amplitude{kInvSqrt2, 0};
  return StateVector(std::move(labels), std::move(amps));
}

StateVector attach_qubit(StateVector state, const QubitLabel& label, int bit) {
  if (state.has_qubit(label))
    throw std::invalid_argument("attach_qubit: label '" + label + "' already present");
  if (bit != 0 && bit != 1) throw std::invalid_argument("attach_qubit: bit must be 0 or 1");
  std::vector<Amplitude> amps(state.dim() * 2, Amplitude{0, 0});
  for (std::size_t i = 0; i < state.dim(); ++i)
    amps[2 * i + static_cast<std::size_t>(bit)] = state.amplitudes_[i];
  state.labels_.push_back(label);
  state.amplitudes_ = std::move(amps);
  return state;
}

StateVector apply_cnot(StateVector state, const QubitLabel& control, const QubitLabel& target) {
  if (control == target) throw std::invalid_argument("apply_cnot: control equals target");
  const std::size_t cmask = state.mask_of(state.position_of(control));
  const std::size_t tmask = state.mask_of(state.position_of(target));
  auto& amps = state.amplitudes_;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(amps[i], amps[i | tmask]);
  }
  return state;
}

StateVector apply_pauli(StateVector state, Pauli op, const QubitLabel& label) {
  const std::size_t mask = state.mask_of(state.position_of(label));
  auto& amps = state.amplitudes_;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (i & mask) continue;
    const std::size_t j = i | mask;
    switch (op) {
      case Pauli::X:
        std::swap(amps[i], amps[j]);
        break;
      case Pauli::Y: {
        // Y|0> = i|1>, Y|1> = -i|0>
        const Amplitude a0 = amps[i], a1 = amps[j];
        amps[i] = Amplitude{0, -1} * a1;
        amps[j] = Amplitude{0, 1} * a0;
        break;
      }
      case Pauli::Z:
        amps[j] = -amps[j];
        break;
    }
  }
  return state;
}

Projection project_qubit(const StateVector& state, const QubitLabel& label, Basis basis,
                         int bit) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("project_qubit: bit must be 0 or 1");
  const std::size_t mask = state.mask_of(state.position_of(label));
  const auto eig = basis_eigenvectors(basis)[bit];
  const Amplitude e0c = std::conj(eig[0]), e1c = std::conj(eig[1]);

  std::vector<Amplitude> post(state.dim(), Amplitude{0, 0});
  double prob = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    if (i & mask) continue;
    const Amplitude overlap = e0c * state.amplitudes()[i] + e1c * state.amplitudes()[i | mask];
    prob += std::norm(overlap);
    post[i] = overlap * eig[0];
    post[i | mask] = overlap * eig[1];
  }

  Projection result;
  result.probability = prob;
  if (prob > 1e-14) {
    const double scale = 1.0 / std::sqrt(prob);
    for (Amplitude& a : post) a *= scale;
    result.state = StateVector(StateVector::Trusted{}, state.labels(), std::move(post));
  }
  return result;
}

std::pair<Outcome, StateVector> measure_qubit(StateVector state, const QubitLabel& label,
                                              Basis basis, Rng& rng) {
  Projection zero = project_qubit(state, label, basis, 0);
  const int bit = rng.uniform01() < zero.probability ? 0 : 1;
  if (bit == 0 && zero.state) return {Outcome::from_bit(0), std::move(*zero.state)};
  Projection one = project_qubit(state, label, basis, 1);
  if (!one.state) throw std::logic_error("measure_qubit: degenerate projection probabilities");
  return {Outcome::from_bit(1), std::move(*one.state)};
}

StateVector remove_qubit(StateVector state, const QubitLabel& label) {
  const int pos = state.position_of(label);
  const std::size_t mask = state.mask_of(pos);

  const DensityMatrix2 rho = reduced_density(state, label);
  if (std::abs(rho.purity() - 1.0) > kStateTol)
    throw std::invalid_argument("remove_qubit: qubit '" + label + "' is entangled");

  // Local state of the qubit = dominant eigenvector of its (pure) density
  // matrix; projecting the register onto it yields the remaining factor.
  const auto [hi, lo] = rho.eigenvalues();
  (void)lo;
  Amplitude v0, v1;
  const Amplitude off = rho.entries[0][1];
  if (std::abs(off) > kStateTol) {
    v0 = off;
    v1 = Amplitude{hi - rho.entries[0][0].real(), 0};
    const double n = std::sqrt(std::norm(v0) + std::norm(v1));
    v0 /= n;
    v1 /= n;
  } else if (rho.entries[0][0].real() >= rho.entries[1][1].real()) {
    v0 = Amplitude{1, 0};
    v1 = Amplitude{0, 0};
  } else {
    v0 = Amplitude{0, 0};
    v1 = Amplitude{1, 0};
  }

  const std::size_t low = mask - 1;                // bits below the removed qubit
  std::vector<Amplitude> rest(state.dim() / 2, Amplitude{0, 0});
  double check = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    if (i & mask) continue;
    const std::size_t compact = ((i & ~((mask << 1) - 1)) >> 1) | (i & low);
    rest[compact] = std::conj(v0) * state.amplitudes()[i] + std::conj(v1) * state.amplitudes()[i | mask];
    check += std::norm(rest[compact]);
  }
  if (std::abs(check - 1.0) > kStateTol)
    throw std::invalid_argument("remove_qubit: residual entanglement on '" + label + "'");

  std::vector<QubitLabel> labels = state.labels();
  labels.erase(labels.begin() + pos);
  return StateVector(StateVector::Trusted{}, std::move(labels), std::move(rest));
}

std::pair<Outcome, StateVector> measure_and_remove(StateVector state, const QubitLabel& label,
                                                   Basis basis, Rng& rng) {
  auto [outcome, collapsed] = measure_qubit(std::move(state), label, basis, rng);
  return {outcome, remove_qubit(std::move(collapsed), label)};
}

DensityMatrix2 reduced_density(const StateVector& state, const QubitLabel& label) {
  const std::size_t mask = state.mask_of(state.position_of(label));
  DensityMatrix2 rho;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    if (i & mask) continue;
    const Amplitude a0 = state.amplitudes()[i];
    const Amplitude a1 = state.amplitudes()[i | mask];
    rho.entries[0][0] += a0 * std::conj(a0);
    rho.entries[0][1] += a0 * std::conj(a1);
    rho.entries[1][0] += a1 * std::conj(a0);
    rho.entries[1][1] += a1 * std::conj(a1);
  }
  return rho;
}

double fidelity(const StateVector& state, const StateVector& reference) {
  if (!state.same_label_set(reference))
    throw std::invalid_argument("fidelity: label sets differ");
  const int n = reference.num_qubits();

  // Map each reference bit position to the matching position in `state`.
  std::vector<int> state_pos(n);
  for (int p = 0; p < n; ++p) state_pos[p] = state.position_of(reference.labels()[p]);

  Amplitude inner{0, 0};
  for (std::size_t i = 0; i < reference.dim(); ++i) {
    std::size_t j = 0;
    for (int p = 0; p < n; ++p) {
      if (i & (std::size_t{1} << (n - 1 - p))) j |= std::size_t{1} << (n - 1 - state_pos[p]);
    }
    inner += std::conj(reference.amplitudes()[i]) * state.amplitudes()[j];
  }
  return std::norm(inner);
}

double pauli_string_expectation(const StateVector& state,
                                const std::vector<std::pair<QubitLabel, Pauli>>& ops) {
  StateVector transformed = state;
  for (const auto& [label, op] : ops) transformed = apply_pauli(std::move(transformed), op, label);
  Amplitude inner{0, 0};
  for (std::size_t i = 0; i < state.dim(); ++i)
    inner += std::conj(state.amplitudes()[i]) * transformed.amplitudes()[i];
  return inner.real();
}

namespace {

void walk_outcomes(const StateVector& state,
                   const std::vector<std::pair<QubitLabel, Basis>>& measurements,
                   std::size_t depth, double weight, std::size_t prefix,
                   std::vector<double>& out) {
  if (depth == measurements.size()) {
    out[prefix] += weight;
    return;
  }
  const auto& [label, basis] = measurements[depth];
  for (int bit = 0; bit < 2; ++bit) {
    Projection proj = project_qubit(state, label, basis, bit);
    if (!proj.state) continue;
    walk_outcomes(*proj.state, measurements, depth + 1, weight * proj.probability,
                  (prefix << 1) | static_cast<std::size_t>(bit), out);
  }
}

}  // namespace

std::vector<double> joint_outcome_distribution(
    const StateVector& state, const std::vector<std::pair<QubitLabel, Basis>>& measurements) {
  std::vector<double> out(std::size_t{1} << measurements.size(), 0.0);
  walk_outcomes(state, measurements, 0, 1.0, 0, out);
  return out;
}

}  // namespace qconf
