#pragma once
//! File formats: measure specifications (a TOML subset), sample files in text
//! and binary form.
//!
//! Measure files accept `key = value` lines, `[section]` headers, `[[name]]`
//! array-of-tables headers, inline tables `{k = v, ...}`, arrays, basic and
//! literal strings, booleans and numbers (decimal or scientific, `_`
//! separators allowed).
//! Comments start with `#`.
//!
//!   label = "counterexample"
//!   atoms = [ {a = 3, b = 1, c = -1, w = 0.2},
//!             {a = 0.5, b = -1, c = 0, w = 0.8} ]
//!
//! or
//!
//!   parametric = {family = "lognormal_normal",
//!                 params = {mu_log_a = -0.5, sigma_log_a = 0.8, mu_b = 0, sigma_b = 1}}
//!
//! Binary sample files are little-endian:
//!   8 bytes magic "AFTSMPL\0", u32 version (1), u32 reserved (0),
//!   u64 count, u64 seed, u64 config digest, then count IEEE-754 doubles.

#include "afftail/engine.hpp"
#include "afftail/error.hpp"
#include "afftail/measure.hpp"

#include <json.hpp>

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace afftail {

namespace detail {

class TomlParser {
public:
    explicit TomlParser(std::string_view text) : s_(text) {}

    nlohmann::json parse() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_ws_and_comments(true);
            if (eof()) break;
            if (peek() == '[') {
                const bool array_of_tables = peek(1) == '[';
                pos_ += array_of_tables ? 2 : 1;
                skip_inline_ws();
                const std::string name = parse_key();
                skip_inline_ws();
                expect(']');
                if (array_of_tables) expect(']');
                if (array_of_tables) {
                    auto& arr = root[name];
                    if (arr.is_null()) arr = nlohmann::json::array();
                    if (!arr.is_array()) fail("'" + name + "' is not an array of tables");
                    arr.push_back(nlohmann::json::object());
                    table = &arr.back();
                } else {
                    if (root.contains(name)) fail("duplicate table [" + name + "]");
                    root[name] = nlohmann::json::object();
                    table = &root[name];
                }
                end_of_line();
                continue;
            }
            const std::string key = parse_key();
            skip_inline_ws();
            expect('=');
            skip_inline_ws();
            if (table->contains(key)) fail("duplicate key '" + key + "'");
            (*table)[key] = parse_value();
            end_of_line();
        }
        return root;
    }

private:
    [[nodiscard]] bool eof() const { return pos_ >= s_.size(); }
    [[nodiscard]] char peek(std::size_t off = 0) const {
        return pos_ + off < s_.size() ? s_[pos_ + off] : '\0';
    }

    [[noreturn]] void fail(const std::string& msg) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
            if (s_[i] == '\n') ++line;
        throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + msg);
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_ws_and_comments(bool newlines) {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
                ++pos_;
            } else if (c == '#') {
                while (!eof() && peek() != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    void end_of_line() {
        skip_inline_ws();
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
        if (peek() == '\r') ++pos_;
        if (!eof() && peek() != '\n') fail("unexpected trailing characters");
    }

    std::string parse_key() {
        if (peek() == '"') return parse_string();
        if (peek() == '\'') return parse_literal_string();
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (pos_ == start) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                const char e = s_[pos_++];
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail("unsupported escape");
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    // 'literal' strings: no escapes.
    std::string parse_literal_string() {
        expect('\'');
        const std::size_t start = pos_;
        while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
        if (eof() || peek() != '\'') fail("unterminated string");
        std::string out(s_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    nlohmann::json parse_number() {
        const std::size_t start = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.' || peek() == '_'))
            ++pos_;
        std::string tok;
        for (char c : s_.substr(start, pos_ - start))
            if (c != '_') tok += c;
        if (tok.empty()) fail("expected a value");
        const bool is_float = tok.find_first_of(".eE") != std::string::npos;
        const char* first = tok.data();
        const char* last = tok.data() + tok.size();
        if (!is_float) {
            if (tok[0] == '-') {
                std::int64_t v = 0;
                const auto [p, ec] = std::from_chars(first, last, v);
                if (ec == std::errc() && p == last) return v;
            } else {
                if (*first == '+') ++first;
                std::uint64_t v = 0;
                const auto [p, ec] = std::from_chars(first, last, v);
                if (ec == std::errc() && p == last) return v;
            }
        }
        first = tok.data();
        if (*first == '+') ++first;
        double v = 0.0;
        const auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last) fail("invalid number '" + tok + "'");
        return v;
    }

    nlohmann::json parse_value() {
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '\'') return parse_literal_string();
        if (c == '[') {
            ++pos_;
            nlohmann::json arr = nlohmann::json::array();
            while (true) {
                skip_ws_and_comments(true);
                if (peek() == ']') {
                    ++pos_;
                    return arr;
                }
                arr.push_back(parse_value());
                skip_ws_and_comments(true);
                if (peek() == ',') {
                    ++pos_;
                } else if (peek() != ']') {
                    fail("expected ',' or ']' in array");
                }
            }
        }
        if (c == '{') {
            ++pos_;
            nlohmann::json tbl = nlohmann::json::object();
            while (true) {
                skip_ws_and_comments(true);
                if (peek() == '}') {
                    ++pos_;
                    return tbl;
                }
                const std::string key = parse_key();
                skip_inline_ws();
                expect('=');
                skip_inline_ws();
                if (tbl.contains(key)) fail("duplicate key '" + key + "'");
                tbl[key] = parse_value();
                skip_ws_and_comments(true);
                if (peek() == ',') {
                    ++pos_;
                } else if (peek() != '}') {
                    fail("expected ',' or '}' in inline table");
                }
            }
        }
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return parse_number();
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& ctx) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw Error(ErrorCode::Parse, ctx + ": missing '" + key + "'");
    if (!it->is_number()) throw Error(ErrorCode::Parse, ctx + ": '" + key + "' must be a number");
    return it->get<double>();
}

} // namespace detail

inline nlohmann::json parse_toml(std::string_view text) { return detail::TomlParser(text).parse(); }

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Build a driver from a parsed document.
inline Driver driver_from_document(const nlohmann::json& doc, const std::string& default_label = "") {
    const std::string label = doc.contains("label") ? doc.at("label").get<std::string>() : default_label;
    const bool has_atoms = doc.contains("atoms");
    const bool has_param = doc.contains("parametric");
    if (has_atoms == has_param)
        throw Error(ErrorCode::Parse, "measure file needs exactly one of 'atoms' or 'parametric'");

    if (has_atoms) {
        const auto& arr = doc.at("atoms");
        if (!arr.is_array() || arr.empty()) throw Error(ErrorCode::Parse, "'atoms' must be a nonempty array");
        AtomicMeasure m;
        m.label = label;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& t = arr[i];
            const std::string ctx = "atom " + std::to_string(i);
            if (!t.is_object()) throw Error(ErrorCode::Parse, ctx + ": expected a table");
            for (const auto& [k, _] : t.items())
                if (k != "a" && k != "b" && k != "c" && k != "w")
                    throw Error(ErrorCode::Parse, ctx + ": unknown key '" + k + "'");
            Atom at;
            at.a = detail::number_field(t, "a", ctx);
            at.b = detail::number_field(t, "b", ctx);
            if (t.contains("c")) at.c = detail::number_field(t, "c", ctx);
            at.weight = detail::number_field(t, "w", ctx);
            m.atoms.push_back(at);
        }
        return normalized(std::move(m));
    }

    const auto& p = doc.at("parametric");
    if (!p.is_object()) throw Error(ErrorCode::Parse, "'parametric' must be a table");
    const std::string family = p.value("family", "");
    if (family != "lognormal_normal")
        throw Error(ErrorCode::Parse, "unknown parametric family '" + family + "' (expected lognormal_normal)");
    const auto& params = p.contains("params") ? p.at("params") : p;
    ParametricDriver d;
    d.label = label;
    d.mu_log_a = detail::number_field(params, "mu_log_a", "parametric");
    d.sigma_log_a = detail::number_field(params, "sigma_log_a", "parametric");
    d.mu_b = detail::number_field(params, "mu_b", "parametric");
    d.sigma_b = detail::number_field(params, "sigma_b", "parametric");
    if (params.contains("c")) d.c = detail::number_field(params, "c", "parametric");
    validate(d);
    return d;
}

inline Driver load_driver(const std::filesystem::path& path) {
    return driver_from_document(parse_toml(read_text_file(path)), path.stem().string());
}

// Sample files.

inline constexpr char kSampleMagic[8] = {'A', 'F', 'T', 'S', 'M', 'P', 'L', '\0'};
inline constexpr std::uint32_t kSampleVersion = 1;

struct SampleFile {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    bool binary = false;
};

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "sample files assume a little-endian host");
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error(ErrorCode::Parse, "truncated binary sample file");
    return v;
}

} // namespace detail

inline void write_samples_text(std::ostream& out, const std::vector<double>& values) {
    char buf[32];
    for (double x : values) {
        const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
        out.write(buf, p - buf);
        out.put('\n');
    }
}

inline void write_samples_binary(std::ostream& out, const std::vector<double>& values, std::uint64_t seed,
                                 std::uint64_t digest) {
    out.write(kSampleMagic, sizeof kSampleMagic);
    detail::put_le<std::uint32_t>(out, kSampleVersion);
    detail::put_le<std::uint32_t>(out, 0);
    detail::put_le<std::uint64_t>(out, values.size());
    detail::put_le<std::uint64_t>(out, seed);
    detail::put_le<std::uint64_t>(out, digest);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline SampleFile parse_samples(const std::string& bytes) {
    SampleFile f;
    if (bytes.size() >= sizeof kSampleMagic && std::memcmp(bytes.data(), kSampleMagic, sizeof kSampleMagic) == 0) {
        std::istringstream in(bytes);
        in.seekg(sizeof kSampleMagic);
        const auto version = detail::get_le<std::uint32_t>(in);
        if (version != kSampleVersion)
            throw Error(ErrorCode::Parse, "unsupported sample file version " + std::to_string(version));
        detail::get_le<std::uint32_t>(in);
        const auto count = detail::get_le<std::uint64_t>(in);
        f.seed = detail::get_le<std::uint64_t>(in);
        f.config_digest = detail::get_le<std::uint64_t>(in);
        const std::size_t header = sizeof kSampleMagic + 8 + 24;
        if (bytes.size() != header + count * sizeof(double))
            throw Error(ErrorCode::Parse, "binary sample file length does not match its count");
        f.values.resize(count);
        std::memcpy(f.values.data(), bytes.data() + header, count * sizeof(double));
        f.binary = true;
        return f;
    }
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        ++line;
        std::string_view tok(bytes.data() + pos, end - pos);
        while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
        while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
        if (!tok.empty() && tok.front() != '#') {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size())
                throw Error(ErrorCode::Parse, "sample file line " + std::to_string(line) + ": not a number");
            f.values.push_back(v);
        }
        pos = end + 1;
    }
    return f;
}

inline SampleFile read_samples(const std::filesystem::path& path) { return parse_samples(read_text_file(path)); }

} // namespace afftail
