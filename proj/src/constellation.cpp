#include "macshape/constellation.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace macshape {

Constellation make_pam(int m) {
    if (m < 1 || m > 8) throw std::invalid_argument("make_pam: m must be in [1,8]");
    const int M = 1 << m;
    Constellation c;
    c.family = Family::pam_orthogonal_pair;
    c.m = m;
    c.signal_dimensions = 1;
    c.points.reserve(M);
    c.labels.reserve(M);
    for (int i = 0; i < M; ++i) {
        c.points.emplace_back(static_cast<double>(-M + 2 * i + 1), 0.0);
        c.labels.push_back(static_cast<std::uint32_t>(i));
    }
    return c;
}

namespace {

Constellation make_qam16(const std::uint32_t axis_label[4]) {
    static const double amp[4] = {-3.0, -1.0, 1.0, 3.0};
    Constellation c;
    c.family = Family::qam;
    c.m = 4;
    c.signal_dimensions = 2;
    c.points.reserve(16);
    c.labels.reserve(16);
    for (int i = 0; i < 4; ++i) {       // in-phase amplitude index
        for (int q = 0; q < 4; ++q) {   // quadrature amplitude index
            c.points.emplace_back(amp[i], amp[q]);
            c.labels.push_back((axis_label[i] << 2) | axis_label[q]);
        }
    }
    return c;
}

} // namespace

Constellation make_qam16_gray() {
    static const std::uint32_t gray[4] = {0b00, 0b01, 0b11, 0b10};
    return make_qam16(gray);
}

Constellation make_qam16_natural() {
    static const std::uint32_t natural[4] = {0b00, 0b01, 0b10, 0b11};
    return make_qam16(natural);
}

Constellation make_constellation(const std::string& id) {
    if (id == "qam16-gray") return make_qam16_gray();
    if (id == "qam16-natural") return make_qam16_natural();
    if (id.rfind("pam", 0) == 0) {
        const std::string num = id.substr(3);
        for (int m = 1; m <= 8; ++m) {
            if (num == std::to_string(1 << m)) return make_pam(m);
        }
    }
    throw std::invalid_argument("unknown constellation id: " + id);
}

std::string constellation_id(const Constellation& c) {
    if (c.family == Family::pam_orthogonal_pair) return "pam" + std::to_string(c.size());
    // distinguish the two bundled QAM labelings by their label sequence
    return c.labels == make_qam16_gray().labels ? "qam16-gray" : "qam16-natural";
}

XorClassIndex build_xor_classes(const Constellation& c) {
    const int M = c.size();
    XorClassIndex x;
    x.labels = c.labels;
    x.classes.assign(static_cast<std::size_t>(M), {});
    for (auto& cls : x.classes) cls.reserve(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) {
        for (int l = 0; l < M; ++l) {
            const std::uint32_t w = c.labels[k] ^ c.labels[l];
            ClassEntry e;
            e.k = static_cast<std::uint16_t>(k);
            e.l = static_cast<std::uint16_t>(l);
            if (c.family == Family::pam_orthogonal_pair) {
                // user B rotated: x_ab = a_k + j*a_l
                e.x_ab = cplx(c.points[k].real(), c.points[l].real());
            } else {
                e.x_ab = c.points[k] + c.points[l];
            }
            x.classes[w].push_back(e);
        }
    }
    x.ambiguity_free = !find_ambiguity(x).has_value();
    return x;
}

XorClassIndex scaled_classes(const Constellation& c, const XorClassIndex& x, double scale_a,
                             double scale_b) {
    if (!(scale_a > 0.0) || !(scale_b > 0.0))
        throw std::invalid_argument("user scales must be positive");
    XorClassIndex s = x;
    for (auto& cls : s.classes) {
        for (auto& e : cls) {
            if (c.family == Family::pam_orthogonal_pair) {
                e.x_ab = cplx(scale_a * c.points[e.k].real(), scale_b * c.points[e.l].real());
            } else {
                e.x_ab = scale_a * c.points[e.k] + scale_b * c.points[e.l];
            }
        }
    }
    return s;
}

std::optional<AmbiguityWitness> find_ambiguity(const XorClassIndex& x) {
    // points are integer by construction, so the lattice key is exact
    std::map<std::pair<long long, long long>, std::uint16_t> owner;
    for (std::uint16_t i = 0; i < x.num_classes(); ++i) {
        for (const auto& e : x.classes[i]) {
            const auto key = std::make_pair(std::llround(e.x_ab.real()), std::llround(e.x_ab.imag()));
            auto [it, inserted] = owner.emplace(key, i);
            if (!inserted && it->second != i) {
                return AmbiguityWitness{e.x_ab, it->second, i};
            }
        }
    }
    return std::nullopt;
}

bool check_ambiguity_free(XorClassIndex& x) {
    x.ambiguity_free = !find_ambiguity(x).has_value();
    return x.ambiguity_free;
}

} // namespace macshape
