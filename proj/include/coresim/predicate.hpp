#pragma once

#include <stdexcept>
#include <string>

namespace coresim {

/// Spatial operator of a safety predicate. ON/NEAR select the class pixels
/// (ON reserved for surfaces), AROUND dilates, BETWEEN hulls the instances.
enum class SpatialOp { ON, NEAR, AROUND, BETWEEN };

inline const char* to_string(SpatialOp op) {
    switch (op) {
        case SpatialOp::ON: return "ON";
        case SpatialOp::NEAR: return "NEAR";
        case SpatialOp::AROUND: return "AROUND";
        case SpatialOp::BETWEEN: return "BETWEEN";
    }
    return "?";
}

struct Predicate {
    SpatialOp op = SpatialOp::NEAR;
    std::string class_label;

    bool operator==(const Predicate& o) const {
        return op == o.op && class_label == o.class_label;
    }
};

inline std::string to_string(const Predicate& p) {
    return std::string(to_string(p.op)) + "(" + p.class_label + ")";
}

/// Parses "AROUND(wet_floor_sign)"-style text; throws on malformed input.
inline Predicate parse_predicate(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open || close + 1 != text.size())
        throw std::invalid_argument("malformed predicate: '" + text + "'");
    const std::string op_name = text.substr(0, open);
    const std::string cls = text.substr(open + 1, close - open - 1);
    if (cls.empty()) throw std::invalid_argument("predicate has empty class: '" + text + "'");
    Predicate p;
    p.class_label = cls;
    if (op_name == "ON") p.op = SpatialOp::ON;
    else if (op_name == "NEAR") p.op = SpatialOp::NEAR;
    else if (op_name == "AROUND") p.op = SpatialOp::AROUND;
    else if (op_name == "BETWEEN") p.op = SpatialOp::BETWEEN;
    else throw std::invalid_argument("unknown spatial operator: '" + op_name + "'");
    return p;
}

}  // namespace coresim
