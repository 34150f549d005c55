#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace macshape {

using cplx = std::complex<double>;

enum class Family {
    pam_orthogonal_pair, // user A real PAM, user B the same points rotated 90 deg
    qam                  // both users share one complex constellation
};

// A 2^m-point constellation with bit labels. Points sit on the odd integer
// lattice (+-1, +-3, ...) and are never normalized; only the ratio between
// symbol energy and noise variance matters downstream.
struct Constellation {
    Family family = Family::pam_orthogonal_pair;
    int m = 0;                          // bits per symbol
    int signal_dimensions = 1;          // real dimensions occupied per user
    std::vector<cplx> points;
    std::vector<std::uint32_t> labels;  // permutation of {0..2^m-1}

    int size() const { return static_cast<int>(points.size()); }
};

// 2^m-ary PAM with points -M+1, -M+3, ..., M-1 and natural labels.
Constellation make_pam(int m);

// 16-QAM on {+-1,+-3}^2 with per-axis Gray labels (00,01,11,10 over ascending
// amplitude), in-phase bits in the high half of the label.
Constellation make_qam16_gray();

// Same lattice with natural (binary-counting) per-axis labels; kept for the
// labeling-sensitivity checks.
Constellation make_qam16_natural();

// Parses "pam2".."pam256" and "qam16-gray". Throws std::invalid_argument.
Constellation make_constellation(const std::string& id);
std::string constellation_id(const Constellation& c);

struct ClassEntry {
    std::uint16_t k = 0;  // symbol index of user A
    std::uint16_t l = 0;  // symbol index of user B
    cplx x_ab;            // superposed point
};

// For each XOR label i, the index pairs (k,l) with labels[k]^labels[l] == i
// together with their superposed points. Classes partition all M^2 pairs and
// each class holds exactly M entries.
struct XorClassIndex {
    std::vector<std::vector<ClassEntry>> classes;
    std::vector<std::uint32_t> labels;  // copy of the constellation labels
    bool ambiguity_free = false;

    int num_classes() const { return static_cast<int>(classes.size()); }
    int num_symbols() const { return static_cast<int>(labels.size()); }
};

XorClassIndex build_xor_classes(const Constellation& c);

// Copy of x with every superposed point rebuilt as scale_a * (user A's
// contribution) + scale_b * (user B's), used by the per-user power-tight SNR
// convention when the two users' average energies differ. Classes, labels and
// the ambiguity flag are taken over unchanged.
XorClassIndex scaled_classes(const Constellation& c, const XorClassIndex& x, double scale_a,
                             double scale_b);

struct AmbiguityWitness {
    cplx x_ab;                       // the colliding superposed point
    std::uint16_t class_a, class_b;  // two distinct classes containing it
};

// A collision between classes, if one exists. Superposed points are compared
// exactly after rounding to the integer lattice.
std::optional<AmbiguityWitness> find_ambiguity(const XorClassIndex& x);

// True iff every repeated superposed value stays inside a single class.
// Also refreshes x.ambiguity_free.
bool check_ambiguity_free(XorClassIndex& x);

} // namespace macshape
