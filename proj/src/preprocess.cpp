#include "ipsim/preprocess.hpp"

#include "ipsim/error.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ipsim {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxMacroDepth = 16;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

std::string rtrim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    return rtrim(s.substr(b));
}

/// Removes // and /* */ comments. Newlines inside block comments are kept so
/// that line numbers survive.
std::string strip_comments(const std::string& text, const std::string& path) {
    std::string out;
    out.reserve(text.size());
    int line = 1;
    for (std::size_t i = 0; i < text.size();) {
        char c = text[i];
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '"' && text[j] != '\n') {
                if (text[j] == '\\' && j + 1 < text.size())
                    ++j;
                ++j;
            }
            if (j < text.size() && text[j] == '"')
                ++j;
            out.append(text, i, j - i);
            i = j;
        } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n')
                ++i;
        } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
            int start_line = line;
            i += 2;
            bool closed = false;
            while (i < text.size()) {
                if (text[i] == '*' && i + 1 < text.size() && text[i + 1] == '/') {
                    i += 2;
                    closed = true;
                    break;
                }
                if (text[i] == '\n') {
                    out.push_back('\n');
                    ++line;
                }
                ++i;
            }
            if (!closed)
                throw PreprocessError({path, start_line, 1}, "unterminated block comment");
            out.push_back(' ');
        } else {
            if (c == '\n')
                ++line;
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

struct Macro {
    bool function_like = false;
    std::vector<std::string> params;
    std::string body;
};

struct CondFrame {
    bool parent_active;
    bool active;
    bool taken;
    bool seen_else;
    int line;
};

const std::set<std::string>& stripped_directives() {
    static const std::set<std::string> names = {
        "timescale", "default_nettype", "resetall", "celldefine", "endcelldefine",
        "nounconnected_drive", "unconnected_drive", "line", "pragma", "begin_keywords", "end_keywords",
    };
    return names;
}

class Preprocessor {
public:
    explicit Preprocessor(const SourceUnit& unit) : unit_(unit) {
        for (const auto& [name, body] : unit.defines)
            macros_[name] = Macro{false, {}, body};
        if (!unit.root.empty())
            root_ = unit.root;
        else if (!unit.files.empty())
            root_ = fs::path(unit.files.front().path).parent_path().string();
    }

    PreprocessedFile run(const SourceFile& file) {
        PreprocessedFile out;
        out.path = file.path;
        std::vector<std::string> lines;
        process(file.path, file.text, lines, out.origins, 0);
        std::string text;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (i)
                text.push_back('\n');
            text += lines[i];
        }
        out.text = std::move(text);
        return out;
    }

private:
    const SourceUnit& unit_;
    std::string root_;
    std::map<std::string, Macro> macros_;

    std::string load_include(const std::string& name, const std::string& from, const SourceLocation& loc,
                             std::string& resolved) {
        std::vector<fs::path> candidates;
        candidates.push_back(fs::path(from).parent_path() / name);
        if (!root_.empty())
            candidates.push_back(fs::path(root_) / name);
        candidates.push_back(fs::path(name));
        for (const auto& cand : candidates) {
            auto norm = cand.lexically_normal().string();
            for (const auto& f : unit_.files) {
                if (fs::path(f.path).lexically_normal().string() == norm) {
                    resolved = f.path;
                    return f.text;
                }
            }
        }
        for (const auto& cand : candidates) {
            std::error_code ec;
            if (fs::is_regular_file(cand, ec)) {
                std::ifstream in(cand, std::ios::binary);
                std::ostringstream ss;
                ss << in.rdbuf();
                resolved = cand.string();
                return ss.str();
            }
        }
        throw PreprocessError(loc, "cannot resolve `include \"" + name + "\"");
    }

    void process(const std::string& path, const std::string& raw, std::vector<std::string>& lines,
                 std::vector<LineOrigin>& origins, int include_depth) {
        if (include_depth > kMaxMacroDepth)
            throw PreprocessError({path, 1, 1}, "`include nesting too deep");
        std::string text = strip_comments(raw, path);

        std::vector<std::pair<std::string, int>> physical;
        {
            std::istringstream in(text);
            std::string line;
            int no = 0;
            while (std::getline(in, line)) {
                ++no;
                if (!line.empty() && line.back() == '\r')
                    line.pop_back();
                physical.emplace_back(line, no);
            }
        }

        std::vector<CondFrame> stack;
        auto active = [&] { return stack.empty() || stack.back().active; };

        for (std::size_t li = 0; li < physical.size(); ++li) {
            std::string line = physical[li].first;
            int line_no = physical[li].second;
            std::string t = trim(line);
            SourceLocation loc{path, line_no, 1};

            if (!t.empty() && t[0] == '`' && t.size() > 1 && is_ident_start(t[1])) {
                std::size_t e = 1;
                while (e < t.size() && is_ident_char(t[e]))
                    ++e;
                std::string dir = t.substr(1, e - 1);
                std::string rest = trim(t.substr(e));

                if (dir == "ifdef" || dir == "ifndef") {
                    bool defined = macros_.count(first_word(rest, loc)) > 0;
                    bool cond = dir == "ifdef" ? defined : !defined;
                    bool parent = active();
                    stack.push_back({parent, parent && cond, cond, false, line_no});
                    continue;
                }
                if (dir == "elsif") {
                    if (stack.empty() || stack.back().seen_else)
                        throw PreprocessError(loc, "`elsif without matching `ifdef");
                    auto& f = stack.back();
                    bool cond = macros_.count(first_word(rest, loc)) > 0;
                    f.active = f.parent_active && !f.taken && cond;
                    f.taken = f.taken || cond;
                    continue;
                }
                if (dir == "else") {
                    if (stack.empty() || stack.back().seen_else)
                        throw PreprocessError(loc, "`else without matching `ifdef");
                    auto& f = stack.back();
                    f.active = f.parent_active && !f.taken;
                    f.taken = true;
                    f.seen_else = true;
                    continue;
                }
                if (dir == "endif") {
                    if (stack.empty())
                        throw PreprocessError(loc, "`endif without matching `ifdef");
                    stack.pop_back();
                    continue;
                }
                if (!active())
                    continue;
                if (dir == "define") {
                    // Continuation lines end with a backslash.
                    while (!rest.empty() && rest.back() == '\\' && li + 1 < physical.size()) {
                        rest.pop_back();
                        rest += " " + trim(physical[++li].first);
                    }
                    define_macro(rest, loc);
                    continue;
                }
                if (dir == "undef") {
                    macros_.erase(first_word(rest, loc));
                    continue;
                }
                if (dir == "include") {
                    std::string name = include_name(rest, loc);
                    std::string resolved;
                    std::string body = load_include(name, path, loc, resolved);
                    process(resolved, body, lines, origins, include_depth + 1);
                    continue;
                }
                if (stripped_directives().count(dir))
                    continue;
                // Otherwise the line starts with a macro use and is ordinary text.
            }
            if (!active())
                continue;
            std::string expanded = rtrim(expand(line, 0, loc));
            if (trim(expanded).empty())
                continue;
            lines.push_back(std::move(expanded));
            origins.push_back({path, line_no});
        }
        if (!stack.empty())
            throw PreprocessError({path, stack.back().line, 1}, "unterminated `ifdef");
    }

    static std::string first_word(const std::string& rest, const SourceLocation& loc) {
        std::size_t e = 0;
        while (e < rest.size() && is_ident_char(rest[e]))
            ++e;
        if (e == 0)
            throw PreprocessError(loc, "expected macro name");
        return rest.substr(0, e);
    }

    static std::string include_name(const std::string& rest, const SourceLocation& loc) {
        if (rest.size() >= 2 && (rest[0] == '"' || rest[0] == '<')) {
            char close = rest[0] == '"' ? '"' : '>';
            auto end = rest.find(close, 1);
            if (end != std::string::npos)
                return rest.substr(1, end - 1);
        }
        throw PreprocessError(loc, "malformed `include");
    }

    void define_macro(const std::string& rest, const SourceLocation& loc) {
        std::string name = first_word(rest, loc);
        Macro m;
        std::size_t pos = name.size();
        if (pos < rest.size() && rest[pos] == '(') {
            m.function_like = true;
            auto close = rest.find(')', pos);
            if (close == std::string::npos)
                throw PreprocessError(loc, "unterminated macro parameter list");
            std::string params = rest.substr(pos + 1, close - pos - 1);
            std::stringstream ss(params);
            std::string p;
            while (std::getline(ss, p, ','))
                m.params.push_back(trim(p));
            pos = close + 1;
        }
        m.body = trim(rest.substr(pos));
        macros_[name] = std::move(m);
    }

    static std::string substitute_params(const Macro& m, const std::vector<std::string>& args) {
        std::string out;
        const std::string& b = m.body;
        for (std::size_t i = 0; i < b.size();) {
            if (is_ident_start(b[i]) && (i == 0 || !is_ident_char(b[i - 1]))) {
                std::size_t e = i;
                while (e < b.size() && is_ident_char(b[e]))
                    ++e;
                std::string word = b.substr(i, e - i);
                bool replaced = false;
                for (std::size_t p = 0; p < m.params.size(); ++p) {
                    if (m.params[p] == word) {
                        out += p < args.size() ? args[p] : std::string();
                        replaced = true;
                        break;
                    }
                }
                if (!replaced)
                    out += word;
                i = e;
            } else {
                out.push_back(b[i++]);
            }
        }
        return out;
    }

    std::string expand(const std::string& s, int depth, const SourceLocation& loc) {
        if (depth > kMaxMacroDepth)
            throw PreprocessError(loc, "macro recursion deeper than 16");
        std::string out;
        for (std::size_t i = 0; i < s.size();) {
            char c = s[i];
            if (c == '"') {
                std::size_t j = i + 1;
                while (j < s.size() && s[j] != '"')
                    j += (s[j] == '\\') ? 2 : 1;
                j = std::min(j + 1, s.size());
                out.append(s, i, j - i);
                i = j;
                continue;
            }
            if (c != '`' || i + 1 >= s.size() || !is_ident_start(s[i + 1])) {
                out.push_back(c);
                ++i;
                continue;
            }
            std::size_t e = i + 1;
            while (e < s.size() && is_ident_char(s[e]))
                ++e;
            std::string name = s.substr(i + 1, e - i - 1);
            auto it = macros_.find(name);
            if (it == macros_.end()) {
                if (stripped_directives().count(name)) {
                    i = s.size();
                    continue;
                }
                throw PreprocessError({loc.file, loc.line, static_cast<int>(i) + 1}, "undefined macro `" + name);
            }
            const Macro& m = it->second;
            std::string replacement;
            if (m.function_like) {
                std::size_t j = e;
                while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j])))
                    ++j;
                if (j >= s.size() || s[j] != '(')
                    throw PreprocessError(loc, "macro `" + name + " expects arguments");
                std::vector<std::string> args;
                std::string cur;
                int nest = 0;
                ++j;
                for (; j < s.size(); ++j) {
                    char a = s[j];
                    if (a == '(' || a == '[' || a == '{')
                        ++nest;
                    if ((a == ')' || a == ']' || a == '}') && nest > 0) {
                        --nest;
                        cur.push_back(a);
                        continue;
                    }
                    if (a == ')' && nest == 0)
                        break;
                    if (a == ',' && nest == 0) {
                        args.push_back(trim(cur));
                        cur.clear();
                        continue;
                    }
                    cur.push_back(a);
                }
                if (j >= s.size())
                    throw PreprocessError(loc, "unterminated arguments to macro `" + name);
                args.push_back(trim(cur));
                replacement = substitute_params(m, args);
                e = j + 1;
            } else {
                replacement = m.body;
            }
            out += expand(replacement, depth + 1, loc);
            i = e;
        }
        return out;
    }
};

} // namespace

std::vector<PreprocessedFile> preprocess(const SourceUnit& unit) {
    if (unit.files.empty())
        throw PreprocessError({}, "source unit has no files");
    Preprocessor pp(unit);
    std::vector<PreprocessedFile> out;
    out.reserve(unit.files.size());
    for (const auto& f : unit.files)
        out.push_back(pp.run(f));
    return out;
}

PreprocessedFile preprocess_text(const std::string& text, const std::string& path,
                                 const std::map<std::string, std::string>& defines) {
    SourceUnit unit;
    unit.files.push_back({path, text});
    unit.defines = defines;
    return preprocess(unit).front();
}

SourceUnit load_unit(const std::vector<std::string>& paths, const std::string& top) {
    SourceUnit unit;
    unit.top_module = top;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in)
            throw Error("cannot open '" + p + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        unit.files.push_back({p, ss.str()});
    }
    return unit;
}

} // namespace ipsim
