#pragma once

#include "cryptodir/backtest.hpp"
#include "cryptodir/classifiers/cart.hpp"
#include "cryptodir/classifiers/common.hpp"
#include "cryptodir/classifiers/forest.hpp"
#include "cryptodir/classifiers/gbt.hpp"
#include "cryptodir/classifiers/knn.hpp"
#include "cryptodir/dataset.hpp"
#include "cryptodir/error.hpp"
#include "cryptodir/indicators.hpp"
#include "cryptodir/klines_client.hpp"
#include "cryptodir/market_data.hpp"
#include "cryptodir/model_io.hpp"
#include "cryptodir/pipeline.hpp"
