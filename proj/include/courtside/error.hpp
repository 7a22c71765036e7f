#pragma once

#include <stdexcept>
#include <string>

namespace courtside {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameter values or mismatched shapes.
class SpecError : public Error {
public:
    using Error::Error;
};

// Non-finite or otherwise unusable numeric input.
class ComputeError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class ProjectionError : public Error {
public:
    using Error::Error;
};

class FeatureError : public Error {
public:
    using Error::Error;
};

class ClusteringError : public Error {
public:
    using Error::Error;
};

class StreamError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class ClassificationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace courtside
