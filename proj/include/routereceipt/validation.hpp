#pragma once

// Schema validation for receipt documents. A small interpreter over the
// embedded v0.1 schema: type, const, enum, required, properties,
// additionalProperties:false, items, $ref (local), uniqueItems, minimum,
// minLength, format:date-time. Collects every violation; never throws on
// well-formed JSON.
//
// Error-kind mapping:
//   missing_required  required member absent
//   unknown_field     member outside a closed property set
//   bad_enum          string outside its closed set
//   bad_type          wrong JSON type (also: unparseable input, at root)
//   bad_format        right type, constraint violated (minLength, minimum,
//                     uniqueItems, date-time form)
//   bad_const         schema_version mismatch

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "routereceipt/schema.hpp"
#include "routereceipt/time.hpp"

namespace routereceipt {

enum class ErrorKind { missing_required, unknown_field, bad_enum, bad_type, bad_format, bad_const };

template <>
struct EnumTraits<ErrorKind> {
    static constexpr std::array<std::string_view, 6> names{"missing_required", "unknown_field", "bad_enum",
                                                           "bad_type",         "bad_format",    "bad_const"};
};

struct ValidationErrorItem {
    std::string path;  // JSON pointer; "" is the document root
    ErrorKind kind = ErrorKind::bad_type;
    std::string detail;

    friend bool operator==(const ValidationErrorItem&, const ValidationErrorItem&) = default;
};

struct ConsistencyWarning {
    std::string path;
    std::string code;
    std::string detail;

    friend bool operator==(const ConsistencyWarning&, const ConsistencyWarning&) = default;
};

struct ValidationReport {
    std::vector<ValidationErrorItem> errors;
    std::vector<ConsistencyWarning> warnings;

    bool valid() const { return errors.empty(); }

    jdoc to_json() const {
        jdoc j;
        j["errors"] = jdoc::array();
        for (const auto& e : errors) {
            jdoc item;
            item["path"] = e.path;
            item["kind"] = to_string(e.kind);
            item["detail"] = e.detail;
            j["errors"].push_back(item);
        }
        j["warnings"] = jdoc::array();
        for (const auto& w : warnings) {
            jdoc item;
            item["path"] = w.path;
            item["code"] = w.code;
            item["detail"] = w.detail;
            j["warnings"].push_back(item);
        }
        j["valid"] = valid();
        return j;
    }
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    ValidationReport report;

    explicit ValidationError(ValidationReport r)
        : Error(summarize(r)), report(std::move(r)) {}

private:
    static std::string summarize(const ValidationReport& r) {
        std::string msg = "invalid receipt document (" + std::to_string(r.errors.size()) + " error(s))";
        if (!r.errors.empty()) {
            msg += ": " + (r.errors.front().path.empty() ? std::string("<root>") : r.errors.front().path) +
                   " " + std::string(to_string(r.errors.front().kind));
        }
        return msg;
    }
};

namespace detail {

inline std::string pointer_escape(std::string_view key) {
    std::string out;
    out.reserve(key.size());
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

inline const char* json_type_name(const jdoc& v) {
    switch (v.type()) {
        case jdoc::value_t::null: return "null";
        case jdoc::value_t::object: return "object";
        case jdoc::value_t::array: return "array";
        case jdoc::value_t::string: return "string";
        case jdoc::value_t::boolean: return "boolean";
        case jdoc::value_t::number_integer:
        case jdoc::value_t::number_unsigned: return "integer";
        case jdoc::value_t::number_float: return "number";
        default: return "unknown";
    }
}

class SchemaChecker {
public:
    explicit SchemaChecker(const jdoc& root) : root_(root) {}

    void check(const jdoc& inst, const jdoc& schema, const std::string& path,
               std::vector<ValidationErrorItem>& out) const {
        if (auto it = schema.find("$ref"); it != schema.end()) {
            check(inst, resolve_ref(it->get_ref<const std::string&>()), path, out);
            return;
        }
        if (auto it = schema.find("type"); it != schema.end()) {
            if (!type_matches(inst, it->get_ref<const std::string&>())) {
                out.push_back({path, ErrorKind::bad_type,
                               "expected " + it->get<std::string>() + ", got " + json_type_name(inst)});
                return;  // nothing below is meaningful on the wrong type
            }
        }
        if (auto it = schema.find("const"); it != schema.end()) {
            if (inst != *it) {
                out.push_back({path, ErrorKind::bad_const,
                               "must equal " + it->dump() + ", got " + inst.dump()});
            }
        }
        if (auto it = schema.find("enum"); it != schema.end()) {
            bool member = false;
            for (const auto& candidate : *it) {
                if (inst == candidate) {
                    member = true;
                    break;
                }
            }
            if (!member) {
                out.push_back({path, ErrorKind::bad_enum, inst.dump() + " is not in " + it->dump()});
            }
        }
        if (auto it = schema.find("minLength"); it != schema.end() && inst.is_string()) {
            if (inst.get_ref<const std::string&>().size() < it->get<std::size_t>()) {
                out.push_back({path, ErrorKind::bad_format,
                               "string shorter than minLength " + it->dump()});
            }
        }
        if (auto it = schema.find("format"); it != schema.end() && inst.is_string()) {
            if (it->get_ref<const std::string&>() == "date-time" &&
                !parse_rfc3339_utc(inst.get_ref<const std::string&>())) {
                out.push_back({path, ErrorKind::bad_format,
                               "not an RFC 3339 UTC date-time with 'Z' offset: " + inst.dump()});
            }
        }
        if (auto it = schema.find("minimum"); it != schema.end() && inst.is_number_integer()) {
            if (inst.get<std::int64_t>() < it->get<std::int64_t>()) {
                out.push_back({path, ErrorKind::bad_format, "below minimum " + it->dump()});
            }
        }
        if (inst.is_object()) check_object(inst, schema, path, out);
        if (inst.is_array()) check_array(inst, schema, path, out);
    }

private:
    const jdoc& root_;

    const jdoc& resolve_ref(const std::string& ref) const {
        // Only local "#/..." refs occur in the embedded schema.
        return root_.at(jdoc::json_pointer(ref.substr(1)));
    }

    static bool type_matches(const jdoc& inst, const std::string& t) {
        if (t == "object") return inst.is_object();
        if (t == "array") return inst.is_array();
        if (t == "string") return inst.is_string();
        if (t == "integer") return inst.is_number_integer();
        if (t == "boolean") return inst.is_boolean();
        if (t == "number") return inst.is_number();
        return false;
    }

    void check_object(const jdoc& inst, const jdoc& schema, const std::string& path,
                      std::vector<ValidationErrorItem>& out) const {
        if (auto it = schema.find("required"); it != schema.end()) {
            for (const auto& name : *it) {
                const auto& key = name.get_ref<const std::string&>();
                if (!inst.contains(key)) {
                    out.push_back({path + "/" + pointer_escape(key), ErrorKind::missing_required,
                                   "required member absent"});
                }
            }
        }
        const auto props_it = schema.find("properties");
        const bool closed = schema.value("additionalProperties", true) == false;
        for (const auto& [key, value] : inst.items()) {
            if (props_it != schema.end() && props_it->contains(key)) {
                check(value, props_it->at(key), path + "/" + pointer_escape(key), out);
            } else if (closed) {
                out.push_back({path + "/" + pointer_escape(key), ErrorKind::unknown_field,
                               "member not in the schema's property set"});
            }
        }
    }

    void check_array(const jdoc& inst, const jdoc& schema, const std::string& path,
                     std::vector<ValidationErrorItem>& out) const {
        if (auto it = schema.find("items"); it != schema.end()) {
            for (std::size_t i = 0; i < inst.size(); ++i) {
                check(inst[i], *it, path + "/" + std::to_string(i), out);
            }
        }
        if (schema.value("uniqueItems", false)) {
            for (std::size_t j = 1; j < inst.size(); ++j) {
                for (std::size_t i = 0; i < j; ++i) {
                    if (inst[i] == inst[j]) {
                        out.push_back({path + "/" + std::to_string(j), ErrorKind::bad_format,
                                       "duplicate of item " + std::to_string(i) +
                                           " in a uniqueItems array"});
                        break;
                    }
                }
            }
        }
    }
};

}  // namespace detail

inline ValidationReport validate_json(const jdoc& doc) {
    ValidationReport report;
    detail::SchemaChecker checker(receipt_schema());
    checker.check(doc, receipt_schema(), "", report.errors);
    return report;
}

inline ValidationReport validate_document(std::string_view text) {
    jdoc doc = jdoc::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        ValidationReport report;
        report.errors.push_back({"", ErrorKind::bad_type, "input is not well-formed JSON"});
        return report;
    }
    return validate_json(doc);
}

}  // namespace routereceipt
