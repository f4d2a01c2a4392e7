#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qconf/rng.hpp"

namespace qconf {

using Amplitude = std::complex<double>;
using QubitLabel = std::string;

// Tolerances: state-level invariants vs single-operation checks.
inline constexpr double kStateTol = 1e-10;
inline constexpr double kOpTol = 1e-12;

enum class Basis { Z, X, Y };
enum class Pauli { X, Y, Z };

const char* basis_name(Basis b);
Basis basis_from_name(std::string_view name);

// Eigenvalue +1 maps to bit 0, eigenvalue -1 to bit 1.
struct Outcome {
  int eigenvalue = +1;
  int bit = 0;
  static Outcome from_bit(int b) { return Outcome{b ? -1 : +1, b ? 1 : 0}; }
};

// Eigenvectors of the measuring basis, indexed [bit][component].
// Z: {|0>, |1>}; X: (|0> +- |1>)/sqrt 2; Y: (|0> +- i|1>)/sqrt 2.
std::array<std::array<Amplitude, 2>, 2> basis_eigenvectors(Basis b);

struct DensityMatrix2 {
  std::array<std::array<Amplitude, 2>, 2> entries{};

  Amplitude at(int row, int col) const { return entries[row][col]; }
  double trace_real() const { return entries[0][0].real() + entries[1][1].real(); }
  bool is_hermitian(double tol = kStateTol) const;
  // Eigenvalues of the Hermitian part; used for positivity and purity checks.
  std::pair<double, double> eigenvalues() const;
  double purity() const;  // tr(rho^2)
  double max_abs_diff(const DensityMatrix2& other) const;
  static DensityMatrix2 maximally_mixed();
};

struct Projection;

// Exact pure state of a labeled multi-qubit register.
//
// Index convention: the label at position 0 is the most significant bit of
// the basis-state index. A register never exceeds a couple dozen qubits, so
// amplitudes live in a dense 2^n vector.
class StateVector {
 public:
  StateVector() : amplitudes_(1, Amplitude{1.0, 0.0}) {}  // empty register
  StateVector(std::vector<QubitLabel> labels, std::vector<Amplitude> amplitudes);

  int num_qubits() const { return static_cast<int>(labels_.size()); }
  std::size_t dim() const { return amplitudes_.size(); }
  const std::vector<QubitLabel>& labels() const { return labels_; }
  const std::vector<Amplitude>& amplitudes() const { return amplitudes_; }

  bool has_qubit(const QubitLabel& label) const;
  int position_of(const QubitLabel& label) const;  // throws on unknown label
  std::size_t mask_of(int position) const {
    return std::size_t{1} << (num_qubits() - 1 - position);
  }

  double norm_squared() const;
  bool same_label_set(const StateVector& other) const;

 private:
  friend StateVector attach_qubit(StateVector state, const QubitLabel& label, int bit);
  friend StateVector apply_cnot(StateVector state, const QubitLabel& control,
                                const QubitLabel& target);
  friend StateVector apply_pauli(StateVector state, Pauli op, const QubitLabel& label);
  friend Projection project_qubit(const StateVector& state, const QubitLabel& label,
                                  Basis basis, int bit);
  friend StateVector remove_qubit(StateVector state, const QubitLabel& label);

  struct Trusted {};
  // Internal fast path: callers guarantee the invariants hold by construction.
  StateVector(Trusted, std::vector<QubitLabel> labels, std::vector<Amplitude> amplitudes)
      : labels_(std::move(labels)), amplitudes_(std::move(amplitudes)) {}

  void validate() const;

  std::vector<QubitLabel> labels_;
  std::vector<Amplitude> amplitudes_;
};

// Conferee labels in order: A, B, C, ... ("T" and "b" are reserved for the
// traveling and auxiliary qubits, which caps the conferee count).
QubitLabel conferee_label(int index);
inline const QubitLabel kTravelingLabel = "T";
inline const QubitLabel kAncillaLabel = "b";

// (|00...0> + |11...1>)/sqrt 2 over `parties` qubits, labels in conferee order.
StateVector make_ghz(int parties);

// Tensor-appends one qubit prepared in |bit>; the new label becomes the least
// significant index bit.
StateVector attach_qubit(StateVector state, const QubitLabel& label, int bit);

StateVector apply_cnot(StateVector state, const QubitLabel& control, const QubitLabel& target);
StateVector apply_pauli(StateVector state, Pauli op, const QubitLabel& label);

// Deterministic projection of one qubit onto a basis eigenvector. The
// returned state keeps the measured qubit, collapsed in place; `state` is
// empty when the outcome has probability ~0.
struct Projection {
  double probability = 0.0;
  std::optional<StateVector> state;
};
Projection project_qubit(const StateVector& state, const QubitLabel& label, Basis basis, int bit);

// Born-rule sampling; the collapsed qubit stays in the register.
std::pair<Outcome, StateVector> measure_qubit(StateVector state, const QubitLabel& label,
                                              Basis basis, Rng& rng);

// Drops an unentangled qubit from the register (errors if it is entangled
// beyond kStateTol). A freshly collapsed qubit always qualifies.
StateVector remove_qubit(StateVector state, const QubitLabel& label);

std::pair<Outcome, StateVector> measure_and_remove(StateVector state, const QubitLabel& label,
                                                   Basis basis, Rng& rng);

// Partial trace down to the named qubit.
DensityMatrix2 reduced_density(const StateVector& state, const QubitLabel& label);

// |<reference|state>|^2; label sets must match (order-insensitive).
double fidelity(const StateVector& state, const StateVector& reference);

// <state| P_1 ... P_k |state> for a product of single-qubit Paulis.
double pauli_string_expectation(const StateVector& state,
                                const std::vector<std::pair<QubitLabel, Pauli>>& ops);

// Engine-path joint outcome distribution for measuring the listed qubits in
// order, computed by walking the sequential-collapse tree (no sampling).
// Entry i corresponds to the outcome bits of the measurements, first
// measurement = most significant bit.
std::vector<double> joint_outcome_distribution(
    const StateVector& state, const std::vector<std::pair<QubitLabel, Basis>>& measurements);

}  // namespace qconf
