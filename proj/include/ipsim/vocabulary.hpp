#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ipsim {

/// Node kinds of a data-flow graph, in one-hot index order. The order is
/// part of the checkpoint contract: bump kVocabularyVersion on any change.
enum class NodeKind : std::uint8_t {
    Input, Output, Inout, Signal, Constant, Branch, Concat, PartSelect,
    And, Or, Xor, Xnor, Nand, Nor, Not,
    Plus, Minus, Times, Divide, Mod, ShiftL, ShiftR,
    Eq, Neq, Lt, Gt, Le, Ge,
    LAnd, LOr, LNot, RedAnd, RedOr, RedXor,
    Cond, Unknown,
};

inline constexpr std::size_t kNodeKindCount = 36;
inline constexpr std::uint32_t kVocabularyVersion = 1;

inline constexpr std::array<std::string_view, kNodeKindCount> kNodeKindNames = {
    "Input", "Output", "Inout", "Signal", "Constant", "Branch", "Concat", "PartSelect",
    "And", "Or", "Xor", "Xnor", "Nand", "Nor", "Not",
    "Plus", "Minus", "Times", "Divide", "Mod", "ShiftL", "ShiftR",
    "Eq", "Neq", "Lt", "Gt", "Le", "Ge",
    "LAnd", "LOr", "LNot", "RedAnd", "RedOr", "RedXor",
    "Cond", "Unknown",
};

static_assert(static_cast<std::size_t>(NodeKind::Unknown) + 1 == kNodeKindCount);

constexpr std::string_view kind_name(NodeKind k) { return kNodeKindNames[static_cast<std::size_t>(k)]; }

constexpr std::optional<NodeKind> kind_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNodeKindCount; ++i)
        if (kNodeKindNames[i] == name)
            return static_cast<NodeKind>(i);
    return std::nullopt;
}

/// Ordered kind list used for one-hot features. Graph kinds are mapped by
/// name; names absent from the list land in the last (Unknown) slot.
struct NodeKindVocabulary {
    std::uint32_t version = kVocabularyVersion;

    constexpr std::size_t size() const { return kNodeKindCount; }
    constexpr std::size_t index_of(NodeKind k) const { return static_cast<std::size_t>(k); }
    constexpr std::size_t index_of(std::string_view name) const {
        auto k = kind_from_name(name);
        return k ? static_cast<std::size_t>(*k) : kNodeKindCount - 1;
    }

    static const NodeKindVocabulary& standard() {
        static const NodeKindVocabulary v{};
        return v;
    }
};

} // namespace ipsim
