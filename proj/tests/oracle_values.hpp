#pragma once

// Generated by tests/oracles/derive_values.py; do not edit by hand.

namespace oracle {

constexpr double kPsi2At6Lambda1Mc = 0.8677374;
constexpr double kNcx2Quantile95D2L4Mc = 14.637637345405771;
constexpr double kMeanPhiOnePlusZMc = 0.7602201095601611;
constexpr double kQmcRegionMc = 0.015845446124239906;
constexpr double kCoveragePwMc = 0.8396205;
constexpr double kCoveragePtAlpha999Mc = 0.549307;
constexpr double kCoveragePtAlpha999Quad = 0.5490176809605629;
constexpr double kCoverageStMc = 0.21927;
constexpr double kCoverageStLowerMc = 0.2260012;
constexpr double kCoverageStQuad = 0.21957157007872605;
constexpr double kCoverageStLowerQuad = 0.22629399380169046;
constexpr double kCoveragePtQuad = 0.775509423126883;
constexpr double kPtScanArgmin = 1.397;
constexpr double kPtScanMin = 0.0931736403119792;
constexpr double kPtHalfLengthB2 = 7.485430405699796;
constexpr double kPtWorstTB2 = 2.0;
constexpr double kMultiStCoverageMc = 0.28259;
constexpr double kFusionPtCoverageMc = 0.336913;
constexpr double kFusionStCoverageMc = 0.349788;
constexpr double kFoldedQuantileMc = 3.1516908372829695;
constexpr double kPwShiftG10B05 = 1.507556722888818;
constexpr double kMultiStPoint0 = 1.9102191212452533;
constexpr double kMultiStPoint1 = 1.488060612584878;
constexpr double kFusionPtPoint = 1.4761904761904763;
constexpr double kFusionStPoint = 2.45506074718116;
constexpr double kDecorKappa = 0.09486832980505137;
constexpr double kDecorTau1Prime = 2.1048116345156926;
constexpr double kDecorSigma1PrimeSq = 0.1110753960462725;
constexpr double kDecorScale = 0.9051316701949487;
constexpr double kDecorBPrimeOfOne = 1.1048116345156926;

constexpr double kPsi2At6Lambda1McSe = 0.00010713039001200358;
constexpr double kNcx2Quantile95D2L4McSe = 0.004973616729551804;
constexpr double kMeanPhiOnePlusZMcSe = 7.465076150826463e-05;
constexpr double kQmcRegionMcSe = 2.3786237150582438e-05;
constexpr double kCoveragePwMcSe = 0.00011604219748856447;
constexpr double kCoveragePtAlpha999McSe = 0.000497562880198071;
constexpr double kCoverageStMcSe = 0.0001308398513832846;
constexpr double kCoverageStLowerMcSe = 0.00013225908573650434;
constexpr double kMultiStCoverageMcSe = 0.00045025869441910835;
constexpr double kFusionPtCoverageMcSe = 0.00047265487454484163;
constexpr double kFusionStCoverageMcSe = 0.0004769028780118652;

}  // namespace oracle
