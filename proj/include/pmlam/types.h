// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary types for the recommender.

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pmlam {

using Index = std::uint32_t;

/// Bad input file, unknown id, malformed flag. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DistanceKind : std::uint8_t { W2Squared, EuclideanSquared };

enum class Relation : std::uint8_t { UserItem = 0, UserUser = 1, ItemItem = 2 };

inline constexpr std::array<Relation, 3> kAllRelations{Relation::UserItem, Relation::UserUser,
                                                       Relation::ItemItem};

enum class EntityKind : std::uint8_t { User, Item };

/// Input construction for the margin network.
///  Gap    : [chi(u,v+); chi(u,v-); chi(u,v-) - chi(u,v+)], chi = squared coordinate gaps
///  Concat : [u; v+; v-]
///  Sum    : u + v+ + v-
enum class IndicatorMode : std::uint8_t { Gap, Concat, Sum };

inline std::size_t relation_slot(Relation r) { return static_cast<std::size_t>(r); }

inline EntityKind anchor_kind(Relation r) {
    return r == Relation::ItemItem ? EntityKind::Item : EntityKind::User;
}

inline EntityKind target_kind(Relation r) {
    return r == Relation::UserUser ? EntityKind::User : EntityKind::Item;
}

std::string_view to_string(DistanceKind k);
std::string_view to_string(Relation r);
std::string_view to_string(IndicatorMode m);

DistanceKind parse_distance_kind(std::string_view s);
Relation parse_relation(std::string_view s);
IndicatorMode parse_indicator_mode(std::string_view s);

}  // namespace pmlam
