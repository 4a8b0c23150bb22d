#include "cgnc/milp_ir.hpp"

#include <cmath>
#include <sstream>

namespace cgnc {

int MilpModel::add_variable(const std::string& name, VarKind kind, double lower,
                            double upper) {
    variables.push_back({name, kind, lower, upper});
    return static_cast<int>(variables.size()) - 1;
}

void MilpModel::add_constraint(LinearConstraint c) {
    constraints.push_back(std::move(c));
}

void MilpModel::validate() const {
    const int nv = static_cast<int>(variables.size());
    for (const auto& v : variables) {
        if (v.kind == VarKind::Binary) {
            if (v.lower != 0.0 || v.upper != 1.0)
                throw InputError("binary variable " + v.name + " must have bounds [0,1]");
        } else {
            if (!std::isfinite(v.lower) || !std::isfinite(v.upper))
                throw InputError("continuous variable " + v.name +
                                 " must have finite bounds");
        }
        if (v.lower > v.upper)
            throw InputError("variable " + v.name + " has crossed bounds");
    }
    auto check_refs = [&](const std::vector<std::pair<int, double>>& coeffs,
                          const std::string& where) {
        for (auto [j, c] : coeffs) {
            if (j < 0 || j >= nv)
                throw InputError("reference to unknown variable in " + where);
            if (!std::isfinite(c)) throw InputError("non-finite coefficient in " + where);
        }
    };
    for (const auto& c : constraints) check_refs(c.coeffs, c.name);
    check_refs(objective, "objective");
}

double MilpModel::lhs(const LinearConstraint& c, const Vec& x) const {
    double s = 0.0;
    for (auto [j, a] : c.coeffs) s += a * x[j];
    return s;
}

double MilpModel::max_violation(const Vec& x) const {
    double worst = 0.0;
    for (size_t j = 0; j < variables.size(); ++j) {
        worst = std::max(worst, variables[j].lower - x[j]);
        worst = std::max(worst, x[j] - variables[j].upper);
    }
    for (const auto& c : constraints) {
        double v = lhs(c, x);
        switch (c.sense) {
            case Sense::Le: worst = std::max(worst, v - c.rhs); break;
            case Sense::Ge: worst = std::max(worst, c.rhs - v); break;
            case Sense::Eq: worst = std::max(worst, std::abs(v - c.rhs)); break;
        }
    }
    return worst;
}

double MilpModel::objective_value(const Vec& x) const {
    double s = obj_constant;
    for (auto [j, a] : objective) s += a * x[j];
    return s;
}

namespace {

void write_expr(std::ostringstream& out,
                const std::vector<std::pair<int, double>>& coeffs,
                const std::vector<MilpVariable>& vars) {
    bool first = true;
    for (auto [j, a] : coeffs) {
        if (a == 0.0) continue;
        if (first) {
            out << (a < 0 ? "- " : "");
            first = false;
        } else {
            out << (a < 0 ? " - " : " + ");
        }
        out.precision(17);
        out << std::abs(a) << " " << vars[j].name;
    }
    if (first) out << "0 " << vars[0].name;
}

}  // namespace

std::string to_lp_format(const MilpModel& m) {
    std::ostringstream out;
    out.precision(17);
    out << (m.obj_sense == ObjSense::Min ? "Minimize" : "Maximize") << "\n obj: ";
    write_expr(out, m.objective, m.variables);
    out << "\nSubject To\n";
    int cid = 0;
    for (const auto& c : m.constraints) {
        out << " " << (c.name.empty() ? "c" + std::to_string(cid) : c.name) << ": ";
        write_expr(out, c.coeffs, m.variables);
        switch (c.sense) {
            case Sense::Le: out << " <= "; break;
            case Sense::Eq: out << " = "; break;
            case Sense::Ge: out << " >= "; break;
        }
        out << c.rhs << "\n";
        ++cid;
    }
    out << "Bounds\n";
    for (const auto& v : m.variables)
        out << " " << v.lower << " <= " << v.name << " <= " << v.upper << "\n";
    bool any_bin = false;
    for (const auto& v : m.variables) any_bin |= v.kind == VarKind::Binary;
    if (any_bin) {
        out << "Binary\n";
        for (const auto& v : m.variables)
            if (v.kind == VarKind::Binary) out << " " << v.name << "\n";
    }
    out << "End\n";
    return out.str();
}

}  // namespace cgnc
