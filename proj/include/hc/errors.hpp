#pragma once

#include <stdexcept>
#include <string>

namespace hc {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MalformedLine : Error {
    size_t line_no;
    MalformedLine(size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_no(line) {}
};

struct EmptyCorpus : Error {
    explicit EmptyCorpus(const std::string& what) : Error("empty corpus: " + what) {}
};

struct TooFewPoints : Error {
    explicit TooFewPoints(const std::string& what) : Error("too few points: " + what) {}
};

struct DimMismatch : Error {
    explicit DimMismatch(const std::string& what) : Error("dimension mismatch: " + what) {}
};

struct KeyMismatch : Error {
    explicit KeyMismatch(const std::string& what) : Error("key mismatch: " + what) {}
};

struct UnboundSlot : Error {
    explicit UnboundSlot(const std::string& slot) : Error("unbound template slot: {" + slot + "}") {}
};

struct EmptySpec : Error {
    EmptySpec() : Error("synthesis spec has no families") {}
};

struct EmptyWindow : Error {
    explicit EmptyWindow(const std::string& what) : Error("time window excludes all sessions: " + what) {}
};

struct EmptySignal : Error {
    explicit EmptySignal(const std::string& ip) : Error("empty signal for ip: " + ip) {}
};

struct UnknownIp : Error {
    explicit UnknownIp(const std::string& ip) : Error("unknown ip: " + ip) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace hc
