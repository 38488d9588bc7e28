#pragma once

#include "medid/assumptions.hpp"
#include "medid/audit.hpp"
#include "medid/errors.hpp"
#include "medid/estimand.hpp"
#include "medid/evaluate.hpp"
#include "medid/ident.hpp"
#include "medid/joint.hpp"
#include "medid/model_io.hpp"
#include "medid/oracle.hpp"
#include "medid/policy.hpp"
#include "medid/rational.hpp"
#include "medid/report.hpp"
#include "medid/sample.hpp"
#include "medid/scm.hpp"
