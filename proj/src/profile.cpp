#include "graphpoison/profile.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "graphpoison/errors.hpp"

namespace graphpoison {

void validate_profile(const FakeUserProfile& p, std::size_t num_items, int r_max) {
    auto check = [&](ItemId item, int score) {
        if (item >= num_items)
            throw ValidationError("fake profile references item " + std::to_string(item) + " of " +
                                  std::to_string(num_items));
        if (score < 1 || score > r_max)
            throw ValidationError("fake profile rating " + std::to_string(score) + " outside 1.." +
                                  std::to_string(r_max));
    };
    check(p.target, p.target_rating);
    std::vector<ItemId> ids;
    ids.reserve(p.fillers.size());
    for (const auto& [item, score] : p.fillers) {
        check(item, score);
        if (item == p.target) throw ValidationError("fake profile lists its target as a filler");
        ids.push_back(item);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ValidationError("fake profile repeats a filler item");
}

void save_profiles(std::span<const FakeUserProfile> profiles, int r_max, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "graphpoison-profiles " << profiles.size() << ' ' << r_max << '\n';
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto& p = profiles[k];
        out << k << ' ' << p.target << ' ' << p.target_rating << " fake\n";
        for (const auto& [item, score] : p.fillers) out << k << ' ' << item << ' ' << score << " fake\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<FakeUserProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const auto src = path.filename().string();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
    std::istringstream header(line);
    std::string magic;
    std::size_t count = 0;
    int r_max = 0;
    if (!(header >> magic >> count >> r_max) || magic != "graphpoison-profiles")
        throw ParseError(src, 1, "bad profile header");

    std::vector<FakeUserProfile> profiles(count);
    std::vector<char> seen(count, 0);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t k = 0;
        ItemId item = 0;
        int score = 0;
        std::string marker;
        if (!(row >> k >> item >> score >> marker) || marker != "fake")
            throw ParseError(src, lineno, "expected `profile item rating fake`");
        if (k >= count) throw ParseError(src, lineno, "profile index out of range");
        if (!seen[k]) {
            profiles[k].target = item;
            profiles[k].target_rating = score;
            seen[k] = 1;
        } else {
            profiles[k].fillers.emplace_back(item, score);
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw ValidationError(src + ": some declared profiles have no ratings");
    return profiles;
}

}  // namespace graphpoison
