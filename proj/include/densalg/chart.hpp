#pragma once

#include "densalg/rational.hpp"

#include <memory>
#include <string>
#include <vector>

namespace densalg {

enum class Parity : int { even = 0, odd = 1 };

inline Parity operator+(Parity a, Parity b) {
    return Parity((int(a) + int(b)) % 2);
}
inline Parity parity_of_int(int k) { return Parity(((k % 2) + 2) % 2); }
inline int sign_if_odd(Parity a, Parity b) {
    return (a == Parity::odd && b == Parity::odd) ? -1 : 1;
}
inline const char* parity_name(Parity p) { return p == Parity::even ? "even" : "odd"; }

// A coordinate chart: named coordinates, each even or odd.
struct Chart {
    std::vector<std::string> names;
    std::vector<Parity> parities;

    std::size_t size() const { return names.size(); }
    Parity parity(int i) const { return parities.at(static_cast<std::size_t>(i)); }
    const std::string& name(int i) const { return names.at(static_cast<std::size_t>(i)); }

    int index_of(const std::string& n) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return static_cast<int>(i);
        return -1;
    }

    bool operator==(const Chart& o) const = default;
};

using ChartPtr = std::shared_ptr<const Chart>;

ChartPtr make_chart(std::vector<std::string> names, std::vector<Parity> parities);

inline void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
    if (a == b) return;
    if (!a || !b || !(*a == *b)) throw error("operands live on different charts");
}

} // namespace densalg
