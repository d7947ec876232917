#pragma once

// Jacobi elliptic functions and the complete elliptic integral of the first
// kind, by arithmetic-geometric mean and descending Landen transformations.
// All signatures use the parameter m = k^2.

namespace pforge::elliptic {

/// Parameter m of an elliptic function, 0 <= m < 1.
class Modulus {
 public:
  /// Throws ContractError outside [0, 1).
  explicit Modulus(double m);
  double m() const { return m_; }

 private:
  double m_;
};

/// Arithmetic-geometric mean; terminates when |a - g| < 1e-15 a (max 40 steps).
double agm(double a, double g);

/// K(m) = pi / (2 AGM(1, sqrt(1 - m)))
double complete_K(Modulus m);

struct SnCnDn {
  double sn;
  double cn;
  double dn;
};

SnCnDn jacobi_sn_cn_dn(double u, Modulus m);

/// Amplitude am(u|m), continuous in u (am(u + 2K) = am(u) + pi).
double amplitude(double u, Modulus m);

/// Inverse of the amplitude: the u with am(u|m) = phi.
double inverse_amplitude(double phi, Modulus m);

}  // namespace pforge::elliptic
