#pragma once

#include <span>
#include <string>
#include <vector>

namespace melseq::eval {

struct Rating {
    std::string sample_id;
    std::string rater_id;
    int rating = 0;  // integral, 1..5
};

// CSV rows `sample_id,rater_id,rating`. Errors carry the line number;
// duplicate (sample, rater) pairs and out-of-range ratings are rejected.
std::vector<Rating> parse_ratings(const std::string& text);
std::vector<Rating> load_ratings(const std::string& path);

struct MosStats {
    int n = 0;
    double mean = 0.0;
    double sigma = 0.0;      // sample standard deviation (0 for n < 2)
    double halfwidth = 0.0;  // 1.96 * sigma / sqrt(n), normal approximation
};

MosStats mos_stats(std::span<const Rating> ratings);

// `3.440 ± 0.182` style, three decimals
std::string format_mos(const MosStats& s);

}  // namespace melseq::eval
