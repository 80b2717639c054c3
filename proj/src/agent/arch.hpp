#pragma once

#include <string>

#include "util/errors.hpp"

namespace forager::agent {

enum class Brain { linear, ff, ff_is, rnn, rnn_is };

Brain brain_from_string(const std::string& s);
std::string to_string(Brain b);

inline bool brain_recurrent(Brain b) { return b == Brain::rnn || b == Brain::rnn_is; }
inline bool brain_input_satiety(Brain b) { return b == Brain::ff_is || b == Brain::rnn_is; }

struct ArchSpec {
    Brain brain = Brain::ff;
    int n_bc = 16;
    int n_lgn = 32;
    int n_fc = 0; // 0 = auto: 128 for recurrent brains, 32 otherwise
    int width = 64;
    int height = 48;
    bool satiety_raw = false; // feed satiety unnormalized instead of /100

    int resolved_n_fc() const {
        if (n_fc > 0) return n_fc;
        return brain_recurrent(brain) ? 128 : 32;
    }

    // Spatial bookkeeping after each pooling stage.
    struct Chain {
        int bp_h, bp_w;   // after avg-pool 3
        int rgc_h, rgc_w; // after avg-pool 3
        int v1_h, v1_w;   // after max-pool 4
        int flat;         // 4*n_bc * v1_h * v1_w
    };

    Chain chain() const {
        Chain c{};
        c.bp_h = height / 3;
        c.bp_w = width / 3;
        c.rgc_h = c.bp_h / 3;
        c.rgc_w = c.bp_w / 3;
        c.v1_h = c.rgc_h / 4;
        c.v1_w = c.rgc_w / 4;
        c.flat = 4 * n_bc * c.v1_h * c.v1_w;
        return c;
    }

    void validate() const {
        if (n_bc < 1 || n_lgn < 1 || n_fc < 0)
            throw config_error("arch: channel counts must be positive");
        if (width < 8 || height < 8) throw config_error("arch: resolution below 8x8");
        const Chain c = chain();
        if (c.v1_h < 1 || c.v1_w < 1)
            throw config_error("arch: resolution " + std::to_string(width) + "x" +
                               std::to_string(height) +
                               " cannot support the three pooling stages (needs >= 36 per axis)");
    }
};

inline Brain brain_from_string(const std::string& s) {
    if (s == "linear") return Brain::linear;
    if (s == "ff") return Brain::ff;
    if (s == "ff_is" || s == "ff-is") return Brain::ff_is;
    if (s == "rnn") return Brain::rnn;
    if (s == "rnn_is" || s == "rnn-is") return Brain::rnn_is;
    throw config_error("unknown brain variant '" + s + "' (linear|ff|ff_is|rnn|rnn_is)");
}

inline std::string to_string(Brain b) {
    switch (b) {
        case Brain::linear: return "linear";
        case Brain::ff: return "ff";
        case Brain::ff_is: return "ff_is";
        case Brain::rnn: return "rnn";
        default: return "rnn_is";
    }
}

} // namespace forager::agent
