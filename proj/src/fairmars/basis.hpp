#ifndef FAIRMARS_BASIS_HPP
#define FAIRMARS_BASIS_HPP

#include <span>
#include <string>
#include <vector>

namespace fairmars {

class Dataset;

enum class HingeDirection { plus, minus };

/// One factor of a basis-function product: a truncated linear function
/// [x_v - k]_+ or [k - x_v]_+, or the raw variable x_v when `linear` is set
/// (linear terms only occur inside knot-search trial models, never in
/// committed bases).
struct HingeTerm {
    int variable = 0;
    double knot = 0.0;
    HingeDirection direction = HingeDirection::plus;
    bool linear = false;
};

/// Product of hinge terms over distinct variables. An empty product is the
/// intercept. `id` is the commit index assigned by the forward pass
/// (0 = intercept) and is kept stable through pruning.
struct BasisFunction {
    std::vector<HingeTerm> terms;
    int id = 0;

    bool is_intercept() const { return terms.empty(); }
    int degree() const { return static_cast<int>(terms.size()); }
    bool uses_variable(int v) const;
};

double eval_hinge(double x, const HingeTerm& term);

double eval_basis(std::span<const double> x_row, const BasisFunction& b);

/// Evaluates `b` on every row of the dataset.
std::vector<double> design_column(const Dataset& ds, const BasisFunction& b);

/// Piecewise closed form of [x-k]_+ - [x-u]_+ for k < u. Serves as the
/// correctness oracle for the descending-knot c-vector update.
double hinge_difference_identity(double x, double k, double u);

std::string render_term(const HingeTerm& term, const std::vector<std::string>& column_names);

/// "Intercept", "h(StdMath-49.86)", "h(49.86-StdMath)", products joined
/// with "*".
std::string render_basis(const BasisFunction& b, const std::vector<std::string>& column_names);

std::string format_knot(double knot);

} // namespace fairmars

#endif
