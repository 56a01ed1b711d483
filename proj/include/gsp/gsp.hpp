#ifndef GSP_GSP_HPP
#define GSP_GSP_HPP

#include "gsp/choice_matrix.hpp"
#include "gsp/core.hpp"
#include "gsp/datagen.hpp"
#include "gsp/enumerative_rb.hpp"
#include "gsp/eval.hpp"
#include "gsp/gpt.hpp"
#include "gsp/halo_mnl.hpp"
#include "gsp/io.hpp"
#include "gsp/master.hpp"
#include "gsp/random.hpp"
#include "gsp/version.hpp"

#endif  // GSP_GSP_HPP
