#pragma once

#include <stdexcept>
#include <string>

namespace cusumseg {

/// Base of every failure raised by the library. `name()` is the stable
/// identifier written into CLI reports (e.g. "NoContrast").
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define CUSUMSEG_DEFINE_ERROR(Type)                                        \
    class Type : public Error {                                            \
    public:                                                                \
        explicit Type(const std::string& what) : Error(#Type, what) {}     \
    }

// I/O
CUSUMSEG_DEFINE_ERROR(MalformedFile);
CUSUMSEG_DEFINE_ERROR(IoError);
CUSUMSEG_DEFINE_ERROR(IndexOutOfRange);

// segmentation
CUSUMSEG_DEFINE_ERROR(NoContrast);
CUSUMSEG_DEFINE_ERROR(EmptyClass);
CUSUMSEG_DEFINE_ERROR(SeedNotFound);
CUSUMSEG_DEFINE_ERROR(DegenerateThreshold);
CUSUMSEG_DEFINE_ERROR(EmptyTrace);

// evaluation and synthesis
CUSUMSEG_DEFINE_ERROR(DimensionMismatch);
CUSUMSEG_DEFINE_ERROR(EmptyImage);
CUSUMSEG_DEFINE_ERROR(InvalidSpec);

#undef CUSUMSEG_DEFINE_ERROR

}  // namespace cusumseg
