#pragma once

#include <array>
#include <string>
#include <string_view>

namespace courtside {

enum class PlayerSlot { Top = 0, Bottom = 1 };

PlayerSlot parse_player_slot(std::string_view s);
std::string player_slot_name(PlayerSlot slot);
inline PlayerSlot other_player(PlayerSlot slot) {
    return slot == PlayerSlot::Top ? PlayerSlot::Bottom : PlayerSlot::Top;
}

// The seven stroke categories, in canonical order.
enum class BallType { Cut = 0, Drive, Lob, Long, Netplay, Rush, Smash };

inline constexpr int kBallTypeCount = 7;

const std::array<std::string, kBallTypeCount>& ball_type_names();
BallType parse_ball_type(std::string_view s);  // case-insensitive, rejects unknown names
std::string ball_type_name(BallType t);

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

struct CourtPoint {
    double x = 0.0;  // meters across court width
    double y = 0.0;  // meters along court length
};

// Axis-aligned detection box, top-left origin, pixel units.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double score = 1.0;
    long source_frame = 0;
};

}  // namespace courtside
