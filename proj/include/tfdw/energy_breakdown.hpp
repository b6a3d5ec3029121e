#pragma once

namespace tfdw {

// Terms of the functional. The Dirac term is stored as the positive number
// c_D int |u|^{8/3}; it enters the total with a minus sign.
struct EnergyBreakdown {
    double weizsacker = 0;   // c_W int |grad u|^2
    double thomas_fermi = 0; // c_TF int |u|^{10/3}
    double dirac = 0;        // c_D int |u|^{8/3}
    double external = 0;     // int V |u|^2
    double hartree = 0;      // D(|u|^2, |u|^2)
    double total = 0;

    // Always the same summation order, so equal terms give bit-identical totals.
    void assemble() noexcept { total = (((weizsacker + thomas_fermi) - dirac) + external) + hartree; }

    bool operator==(EnergyBreakdown const&) const = default;
};

} // namespace tfdw
