#include "graphpoison/ratings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "graphpoison/errors.hpp"
#include "graphpoison/profile.hpp"

namespace graphpoison {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

// Accepts "4" and "4.0"; rejects non-integral values.
std::optional<int> parse_score(std::string_view s) {
    s = trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && p == s.data() + s.size()) return v;
    double d = 0;
    auto [p2, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec2 != std::errc{} || p2 != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(d) || std::floor(d) != d) return std::nullopt;
    return static_cast<int>(d);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

}  // namespace

RatingMatrix RatingMatrix::from_triples(std::size_t num_users, std::size_t num_items,
                                        std::vector<RatingTriple> triples, int r_max,
                                        std::optional<std::size_t> num_normal_users,
                                        std::vector<std::string> user_labels,
                                        std::vector<std::string> item_labels) {
    if (r_max < 1) throw ValidationError("r_max must be >= 1, got " + std::to_string(r_max));
    RatingMatrix m;
    m.r_max_ = r_max;
    m.num_normal_ = num_normal_users.value_or(num_users);
    if (m.num_normal_ > num_users) throw ValidationError("normal user count exceeds user count");

    for (const auto& t : triples) {
        if (t.user >= num_users || t.item >= num_items)
            throw ValidationError("rating (" + std::to_string(t.user) + ", " + std::to_string(t.item) +
                                  ") outside " + std::to_string(num_users) + "x" + std::to_string(num_items));
        if (t.score < 1 || t.score > r_max)
            throw ValidationError("rating " + std::to_string(t.score) + " for (" + std::to_string(t.user) + ", " +
                                  std::to_string(t.item) + ") outside 1.." + std::to_string(r_max));
    }
    std::sort(triples.begin(), triples.end(), [](const RatingTriple& a, const RatingTriple& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    auto dup = std::adjacent_find(triples.begin(), triples.end(), [](const RatingTriple& a, const RatingTriple& b) {
        return a.user == b.user && a.item == b.item;
    });
    if (dup != triples.end())
        throw ValidationError("duplicate rating for (" + std::to_string(dup->user) + ", " +
                              std::to_string(dup->item) + ")");

    m.user_offsets_.assign(num_users + 1, 0);
    m.item_offsets_.assign(num_items + 1, 0);
    for (const auto& t : triples) {
        ++m.user_offsets_[t.user + 1];
        ++m.item_offsets_[t.item + 1];
    }
    for (std::size_t u = 0; u < num_users; ++u) m.user_offsets_[u + 1] += m.user_offsets_[u];
    for (std::size_t i = 0; i < num_items; ++i) m.item_offsets_[i + 1] += m.item_offsets_[i];

    m.user_entries_.resize(triples.size());
    m.item_entries_.resize(triples.size());
    std::vector<std::size_t> item_fill(m.item_offsets_.begin(), m.item_offsets_.end() - 1);
    for (std::size_t k = 0; k < triples.size(); ++k) {
        const auto& t = triples[k];
        m.user_entries_[k] = {t.item, t.score};
        // triples are user-sorted, so each item's list comes out user-sorted too
        m.item_entries_[item_fill[t.item]++] = {t.user, t.score};
    }

    if (user_labels.empty()) {
        user_labels.reserve(num_users);
        for (std::size_t u = 0; u < num_users; ++u) user_labels.push_back(std::to_string(u));
    }
    if (item_labels.empty()) {
        item_labels.reserve(num_items);
        for (std::size_t i = 0; i < num_items; ++i) item_labels.push_back(std::to_string(i));
    }
    if (user_labels.size() != num_users || item_labels.size() != num_items)
        throw ValidationError("label table size does not match matrix shape");
    m.user_labels_ = std::move(user_labels);
    m.item_labels_ = std::move(item_labels);
    return m;
}

std::span<const RatingEntry> RatingMatrix::user_ratings(UserId u) const {
    return {user_entries_.data() + user_offsets_.at(u), user_entries_.data() + user_offsets_.at(u + 1)};
}

std::span<const RatingEntry> RatingMatrix::item_ratings(ItemId i) const {
    return {item_entries_.data() + item_offsets_.at(i), item_entries_.data() + item_offsets_.at(i + 1)};
}

int RatingMatrix::rating(UserId u, ItemId i) const {
    auto row = user_ratings(u);
    auto it = std::lower_bound(row.begin(), row.end(), i,
                               [](const RatingEntry& e, ItemId key) { return e.index < key; });
    return (it != row.end() && it->index == i) ? it->score : 0;
}

std::vector<RatingTriple> RatingMatrix::triples() const {
    std::vector<RatingTriple> out;
    out.reserve(num_ratings());
    for (UserId u = 0; u < num_users(); ++u)
        for (const auto& e : user_ratings(u)) out.push_back({u, e.index, e.score});
    return out;
}

void RatingMatrixBuilder::add(const std::string& user, const std::string& item, int score,
                              const std::string& where) {
    auto [uit, unew] = user_ids_.try_emplace(user, static_cast<UserId>(user_labels_.size()));
    if (unew) user_labels_.push_back(user);
    auto [iit, inew] = item_ids_.try_emplace(item, static_cast<ItemId>(item_labels_.size()));
    if (inew) item_labels_.push_back(item);
    triples_.push_back({uit->second, iit->second, score});
    origins_.push_back(where);
}

RatingMatrix RatingMatrixBuilder::build(std::optional<int> r_max) && {
    int scale = kDefaultRatingMax;
    if (r_max) {
        scale = *r_max;
    } else if (!triples_.empty()) {
        scale = std::max_element(triples_.begin(), triples_.end(), [](const auto& a, const auto& b) {
                    return a.score < b.score;
                })->score;
    }
    for (std::size_t k = 0; k < triples_.size(); ++k) {
        const auto& t = triples_[k];
        if (t.score < 1 || t.score > scale)
            throw ValidationError((origins_[k].empty() ? std::string{} : origins_[k] + ": ") + "rating " +
                                  std::to_string(t.score) + " outside 1.." + std::to_string(scale));
    }
    // name duplicates by their original identifiers
    std::vector<std::size_t> order(triples_.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = triples_[a];
        const auto& y = triples_[b];
        return x.user != y.user ? x.user < y.user : (x.item != y.item ? x.item < y.item : a < b);
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto& a = triples_[order[k - 1]];
        const auto& b = triples_[order[k]];
        if (a.user == b.user && a.item == b.item)
            throw ValidationError("duplicate rating for (user " + user_labels_[a.user] + ", item " +
                                  item_labels_[a.item] + ")" +
                                  (origins_[order[k]].empty() ? std::string{} : " at " + origins_[order[k]]));
    }
    const auto nu = user_labels_.size();
    const auto ni = item_labels_.size();
    return RatingMatrix::from_triples(nu, ni, std::move(triples_), scale, std::nullopt, std::move(user_labels_),
                                      std::move(item_labels_));
}

RatingMatrix load_movielens(const std::filesystem::path& path, std::optional<int> r_max) {
    auto in = open_input(path);
    RatingMatrixBuilder builder;
    std::string line;
    std::size_t lineno = 0;
    const auto src = path.filename().string();
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view.empty()) continue;
        auto fields = split(view, '\t');
        if (fields.size() != 4) throw ParseError(src, lineno, "expected 4 tab-separated fields");
        long long ts = 0;
        auto tsf = trim(fields[3]);
        auto [p, ec] = std::from_chars(tsf.data(), tsf.data() + tsf.size(), ts);
        if (ec != std::errc{} || p != tsf.data() + tsf.size()) throw ParseError(src, lineno, "bad timestamp");
        auto score = parse_score(fields[2]);
        if (!score) throw ParseError(src, lineno, "bad rating '" + std::string(fields[2]) + "'");
        auto user = trim(fields[0]);
        auto item = trim(fields[1]);
        if (user.empty() || item.empty()) throw ParseError(src, lineno, "empty user or item id");
        builder.add(std::string(user), std::string(item), *score, src + ":" + std::to_string(lineno));
    }
    return std::move(builder).build(r_max);
}

RatingMatrix load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::optional<int> r_max) {
    auto in = open_input(path);
    const auto src = path.filename().string();
    std::string line;
    std::size_t lineno = 0;

    std::optional<std::size_t> ucol = schema.user_index, icol = schema.item_index, rcol = schema.rating_index;
    if (schema.has_header) {
        if (!std::getline(in, line)) return std::move(RatingMatrixBuilder{}).build(r_max);
        ++lineno;
        auto names = split(line, schema.delimiter);
        auto find = [&](const std::string& name) -> std::optional<std::size_t> {
            for (std::size_t k = 0; k < names.size(); ++k)
                if (trim(names[k]) == name) return k;
            return std::nullopt;
        };
        if (!ucol) ucol = find(schema.user_column);
        if (!icol) icol = find(schema.item_column);
        if (!rcol) rcol = find(schema.rating_column);
        if (!ucol) throw SchemaError(src + ": missing user column '" + schema.user_column + "'");
        if (!icol) throw SchemaError(src + ": missing item column '" + schema.item_column + "'");
        if (!rcol) throw SchemaError(src + ": missing rating column '" + schema.rating_column + "'");
    } else if (!ucol || !icol || !rcol) {
        throw SchemaError("headerless CSV requires user, item and rating column positions");
    }
    const auto needed = std::max({*ucol, *icol, *rcol}) + 1;

    RatingMatrixBuilder builder;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (trim(view).empty()) continue;
        auto fields = split(view, schema.delimiter);
        if (fields.size() < needed)
            throw ParseError(src, lineno, "expected at least " + std::to_string(needed) + " fields");
        auto score = parse_score(fields[*rcol]);
        if (!score) throw ParseError(src, lineno, "bad rating '" + std::string(fields[*rcol]) + "'");
        auto user = trim(fields[*ucol]);
        auto item = trim(fields[*icol]);
        if (user.empty() || item.empty()) throw ParseError(src, lineno, "empty user or item id");
        builder.add(std::string(user), std::string(item), *score, src + ":" + std::to_string(lineno));
    }
    return std::move(builder).build(r_max);
}

void save_snapshot(const RatingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "graphpoison-ratings " << m.num_users() << ' ' << m.num_items() << ' ' << m.num_ratings() << ' '
        << m.r_max() << ' ' << m.num_normal_users() << '\n';
    for (const auto& t : m.triples()) out << t.user << ' ' << t.item << ' ' << t.score << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

RatingMatrix load_snapshot(const std::filesystem::path& path) {
    auto in = open_input(path);
    const auto src = path.filename().string();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(src, 1, "missing header");
    std::istringstream header(line);
    std::string magic;
    std::size_t nu = 0, ni = 0, nr = 0, nn = 0;
    int r_max = 0;
    if (!(header >> magic >> nu >> ni >> nr >> r_max >> nn) || magic != "graphpoison-ratings")
        throw ParseError(src, 1, "bad snapshot header");
    std::vector<RatingTriple> triples;
    triples.reserve(nr);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        RatingTriple t{};
        if (!(row >> t.user >> t.item >> t.score)) throw ParseError(src, lineno, "expected `user item rating`");
        triples.push_back(t);
    }
    if (triples.size() != nr)
        throw ValidationError(src + ": header declares " + std::to_string(nr) + " ratings, found " +
                              std::to_string(triples.size()));
    return RatingMatrix::from_triples(nu, ni, std::move(triples), r_max, nn);
}

DatasetStats stats(const RatingMatrix& m) {
    if (m.num_users() == 0 || m.num_items() == 0)
        throw ValidationError("sparsity undefined for a matrix with zero users or items");
    DatasetStats s;
    s.num_users = m.num_users();
    s.num_items = m.num_items();
    s.num_ratings = m.num_ratings();
    s.sparsity = 1.0 - static_cast<double>(s.num_ratings) /
                           (static_cast<double>(s.num_users) * static_cast<double>(s.num_items));
    return s;
}

GlobalStats global_stats(const RatingMatrix& m, UserScope scope) {
    const std::size_t users = scope == UserScope::all ? m.num_users() : m.num_normal_users();
    double sum = 0;
    std::size_t n = 0;
    for (UserId u = 0; u < users; ++u)
        for (const auto& e : m.user_ratings(u)) {
            sum += e.score;
            ++n;
        }
    if (n == 0) throw ValidationError("global statistics undefined for a matrix without ratings");
    const double mean = sum / static_cast<double>(n);
    double ss = 0;
    for (UserId u = 0; u < users; ++u)
        for (const auto& e : m.user_ratings(u)) ss += (e.score - mean) * (e.score - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n))};
}

ItemStats item_stats(const RatingMatrix& m, UserScope scope) {
    ItemStats s;
    const auto ni = m.num_items();
    s.mean.assign(ni, 0.0);
    s.stddev.assign(ni, 0.0);
    s.count.assign(ni, 0);
    double fallback = 0.0;
    bool have_global = false;
    for (ItemId i = 0; i < ni; ++i) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& e : m.item_ratings(i)) {
            if (scope == UserScope::normal_only && m.is_fake(e.index)) continue;
            sum += e.score;
            ++n;
        }
        s.count[i] = n;
        if (n == 0) {
            if (!have_global) {
                fallback = global_stats(m, scope).mean;
                have_global = true;
            }
            s.mean[i] = fallback;
            continue;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0;
        for (const auto& e : m.item_ratings(i)) {
            if (scope == UserScope::normal_only && m.is_fake(e.index)) continue;
            ss += (e.score - mean) * (e.score - mean);
        }
        s.mean[i] = mean;
        s.stddev[i] = n > 1 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
    }
    return s;
}

std::vector<UserId> unrated_users(const RatingMatrix& m, ItemId t) {
    if (t >= m.num_items()) throw ValidationError("target item " + std::to_string(t) + " out of range");
    std::vector<UserId> out;
    auto raters = m.item_ratings(t);
    auto it = raters.begin();
    for (UserId u = 0; u < m.num_normal_users(); ++u) {
        while (it != raters.end() && it->index < u) ++it;
        if (it != raters.end() && it->index == u) continue;
        out.push_back(u);
    }
    return out;
}

RatingMatrix append_fake_users(const RatingMatrix& m, std::span<const FakeUserProfile> profiles) {
    if (profiles.empty()) return m;
    auto triples = m.triples();
    auto labels = m.user_labels();
    UserId next = static_cast<UserId>(m.num_users());
    for (const auto& p : profiles) {
        validate_profile(p, m.num_items(), m.r_max());
        triples.push_back({next, p.target, p.target_rating});
        for (const auto& [item, score] : p.fillers) triples.push_back({next, item, score});
        labels.push_back("fake-" + std::to_string(next - m.num_normal_users()));
        ++next;
    }
    return RatingMatrix::from_triples(next, m.num_items(), std::move(triples), m.r_max(), m.num_normal_users(),
                                      std::move(labels), m.item_labels());
}

RatingMatrix remove_users(const RatingMatrix& m, std::span<const UserId> users) {
    std::vector<char> drop(m.num_users(), 0);
    for (auto u : users) {
        if (u >= m.num_users()) throw ValidationError("user " + std::to_string(u) + " out of range");
        drop[u] = 1;
    }
    std::vector<UserId> remap(m.num_users(), 0);
    std::vector<std::string> labels;
    UserId next = 0;
    std::size_t normals = 0;
    for (UserId u = 0; u < m.num_users(); ++u) {
        if (drop[u]) continue;
        remap[u] = next++;
        labels.push_back(m.user_label(u));
        if (!m.is_fake(u)) ++normals;
    }
    std::vector<RatingTriple> triples;
    for (UserId u = 0; u < m.num_users(); ++u) {
        if (drop[u]) continue;
        for (const auto& e : m.user_ratings(u)) triples.push_back({remap[u], e.index, e.score});
    }
    return RatingMatrix::from_triples(next, m.num_items(), std::move(triples), m.r_max(), normals, std::move(labels),
                                      m.item_labels());
}

std::size_t fake_user_count(const RatingMatrix& m, double attack_size) {
    if (!(attack_size >= 0.0)) throw ValidationError("attack size must be non-negative");
    // the epsilon keeps exact products such as 0.03 * 1000 from flooring to 29
    return static_cast<std::size_t>(std::floor(attack_size * static_cast<double>(m.num_normal_users()) + 1e-9));
}

}  // namespace graphpoison
