#pragma once

#include <stdexcept>
#include <string>

namespace cfeval {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// corpus
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line_no, const std::string& reason)
        : Error("malformed row at line " + std::to_string(line_no) + ": " + reason),
          line_no(line_no), reason(reason) {}
    std::size_t line_no;
    std::string reason;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id)
        : Error("duplicate id: " + id), id(id) {}
    std::string id;
};

class NegativeVariantIndex : public Error {
public:
    explicit NegativeVariantIndex(std::size_t line_no)
        : Error("negative variant_index at line " + std::to_string(line_no)), line_no(line_no) {}
    std::size_t line_no;
};

class OrphanRecord : public Error {
public:
    explicit OrphanRecord(const std::string& instance_id)
        : Error("record references unknown instance: " + instance_id), instance_id(instance_id) {}
    std::string instance_id;
};

// backends
class Transport : public Error {
public:
    explicit Transport(const std::string& detail)
        : Error("transport error: " + detail) {}
};

class BadResponse : public Error {
public:
    explicit BadResponse(const std::string& reason)
        : Error("bad response: " + reason) {}
};

class LabelMismatch : public Error {
public:
    LabelMismatch(const std::string& got, const std::string& expected)
        : Error("label mismatch: got \"" + got + "\", expected one of {" + expected + "}"),
          got(got) {}
    std::string got;
};

class EmptyText : public Error {
public:
    EmptyText() : Error("empty text") {}
};

class CacheCorrupt : public Error {
public:
    explicit CacheCorrupt(const std::string& key)
        : Error("corrupt cache entry: " + key), key(key) {}
    std::string key;
};

// metrics
class EmptyInput : public Error {
public:
    EmptyInput() : Error("empty input") {}
};

class OutOfRange : public Error {
public:
    explicit OutOfRange(const std::string& detail) : Error("out of range: " + detail) {}
};

class NothingIncluded : public Error {
public:
    NothingIncluded() : Error("filter removed every item") {}
};

// judge
class Unparseable : public Error {
public:
    explicit Unparseable(const std::string& response)
        : Error("no score found in response: " + response), response(response) {}
    std::string response;
};

class InsufficientOverlap : public Error {
public:
    InsufficientOverlap() : Error("fewer than 2 shared score keys") {}
};

// generate
class MissingMarkers : public Error {
public:
    MissingMarkers() : Error("response contains no <cf>...</cf> markers") {}
};

class MissingField : public Error {
public:
    explicit MissingField(const std::string& name)
        : Error("missing field inside markers: " + name), name(name) {}
    std::string name;
};

// analysis
class LengthMismatch : public Error {
public:
    LengthMismatch(std::size_t a, std::size_t b)
        : Error("series length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class DegenerateSeries : public Error {
public:
    DegenerateSeries() : Error("correlation undefined for constant series") {}
};

class NoOverlap : public Error {
public:
    NoOverlap(const std::string& a, const std::string& b)
        : Error("methods share no instances: " + a + " / " + b) {}
};

// runner
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config error: " + detail) {}
};

class UnknownFormat : public Error {
public:
    explicit UnknownFormat(const std::string& f) : Error("unknown format: " + f) {}
};

}  // namespace cfeval
