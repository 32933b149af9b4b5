#include "bootdqn/error.hpp"
