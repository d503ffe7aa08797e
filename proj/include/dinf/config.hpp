#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dinf/errors.hpp"

namespace dinf {

// Flat key=value configuration. A schema declares every key a subcommand
// understands together with its default and a help line; the parsed file and
// the command-line overrides are checked against it, so unknown keys, type
// mismatches, and duplicates are always errors that name their source line.

struct config_schema {
    struct entry {
        std::string key;
        std::string def;  // empty means the key is required
        std::string help;
    };

    std::vector<entry> entries;

    void add(std::string key, std::string def, std::string help) {
        entries.push_back({std::move(key), std::move(def), std::move(help)});
    }

    const entry* find(std::string_view key) const {
        for (const auto& e : entries)
            if (e.key == key) return &e;
        return nullptr;
    }

    // the generated defaults reference: one commented block per key
    std::string reference() const {
        std::ostringstream out;
        for (const auto& e : entries) {
            out << "# " << e.help << "\n";
            if (e.def.empty())
                out << "# " << e.key << " = <required>\n";
            else
                out << e.key << " = " << e.def << "\n";
        }
        return out.str();
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool valid_key(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    for (char c : key) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

class run_config {
  public:
    explicit run_config(config_schema schema) : schema_(std::move(schema)) {}

    const config_schema& schema() const { return schema_; }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config " + path + " for reading");
        std::ostringstream buf;
        buf << in.rdbuf();
        if (in.bad()) throw io_error("read failure on " + path);
        load_text(buf.str(), path);
    }

    void load_text(const std::string& text, const std::string& name) {
        name_ = name;
        std::istringstream in(text);
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view s(line);
            if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
            s = detail::trim(s);
            if (s.empty()) continue;
            auto eq = s.find('=');
            if (eq == std::string_view::npos)
                throw config_error(name_ + ": line " + std::to_string(lineno) +
                                   ": expected key = value");
            std::string key(detail::trim(s.substr(0, eq)));
            std::string value(detail::trim(s.substr(eq + 1)));
            if (!detail::valid_key(key))
                throw config_error(name_ + ": line " + std::to_string(lineno) +
                                   ": malformed key '" + key + "'");
            if (value.empty())
                throw config_error(name_ + ": line " + std::to_string(lineno) + ": key '" + key +
                                   "' has no value");
            if (auto it = values_.find(key); it != values_.end())
                throw config_error(name_ + ": duplicate key '" + key + "' at lines " +
                                   std::to_string(it->second.line) + " and " +
                                   std::to_string(lineno));
            const config_schema::entry* known = schema_.find(key);
            if (!known)
                throw config_error(name_ + ": line " + std::to_string(lineno) +
                                   ": unknown key '" + key + "'");
            values_[key] = {value, lineno};
        }
    }

    // command-line overrides win over file values and never count as duplicates
    void apply_override(const std::string& token) {
        auto eq = token.find('=');
        if (eq == std::string::npos)
            throw config_error("override '" + token + "': expected key=value");
        std::string key(detail::trim(std::string_view(token).substr(0, eq)));
        std::string value(detail::trim(std::string_view(token).substr(eq + 1)));
        if (!detail::valid_key(key))
            throw config_error("override '" + token + "': malformed key '" + key + "'");
        if (value.empty())
            throw config_error("override '" + token + "': key '" + key + "' has no value");
        if (!schema_.find(key)) throw config_error("command line: unknown key '" + key + "'");
        values_[key] = {value, 0};  // line 0 marks the command line
    }

    bool is_set(const std::string& key) const {
        check_known(key);
        return values_.count(key) != 0;
    }

    std::string text(const std::string& key) const { return raw(key); }

    double number(const std::string& key) const { return parse_number(key, raw(key)); }

    std::int64_t integer(const std::string& key) const {
        const std::string v = raw(key);
        std::int64_t out = 0;
        auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size())
            throw config_error(origin(key) + ": key '" + key + "': not an integer: '" + v + "'");
        return out;
    }

    bool flag(const std::string& key) const {
        const std::string v = raw(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw config_error(origin(key) + ": key '" + key + "': not a boolean: '" + v +
                           "' (use true or false)");
    }

    // comma-separated lists
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& cell : split(raw(key))) out.push_back(parse_number(key, cell));
        return out;
    }

    std::vector<int> integers(const std::string& key) const {
        std::vector<int> out;
        for (const auto& cell : split(raw(key))) {
            int v = 0;
            auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || end != cell.data() + cell.size())
                throw config_error(origin(key) + ": key '" + key + "': not an integer: '" + cell +
                                   "'");
            out.push_back(v);
        }
        return out;
    }

    // maps an enumeration-valued key through (name, value) choices
    template <class T>
    T choice(const std::string& key,
             std::initializer_list<std::pair<std::string_view, T>> options) const {
        const std::string v = raw(key);
        for (const auto& [name, val] : options)
            if (v == name) return val;
        std::string allowed;
        for (const auto& [name, val] : options) {
            if (!allowed.empty()) allowed += ", ";
            allowed += name;
        }
        throw config_error(origin(key) + ": key '" + key + "': unknown value '" + v +
                           "' (choices: " + allowed + ")");
    }

  private:
    struct stored {
        std::string value;
        long line = 0;
    };

    void check_known(const std::string& key) const {
        if (!schema_.find(key))
            throw internal_error("config key '" + key + "' is not in the schema");
    }

    std::string raw(const std::string& key) const {
        check_known(key);
        if (auto it = values_.find(key); it != values_.end()) return it->second.value;
        const auto* e = schema_.find(key);
        if (e->def.empty())
            throw config_error((name_.empty() ? std::string("config") : name_) +
                               ": missing required key '" + key + "'");
        return e->def;
    }

    std::string origin(const std::string& key) const {
        if (auto it = values_.find(key); it != values_.end()) {
            if (it->second.line == 0) return "command line";
            return name_ + ": line " + std::to_string(it->second.line);
        }
        return "default for " + name_;
    }

    double parse_number(const std::string& key, const std::string& v) const {
        double out = 0.0;
        auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size())
            throw config_error(origin(key) + ": key '" + key + "': not a number: '" + v + "'");
        return out;
    }

    static std::vector<std::string> split(const std::string& v) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = v.find(',', start);
            out.emplace_back(detail::trim(std::string_view(v).substr(
                start, comma == std::string::npos ? comma : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }

    config_schema schema_;
    std::map<std::string, stored> values_;
    std::string name_;
};

}  // namespace dinf
