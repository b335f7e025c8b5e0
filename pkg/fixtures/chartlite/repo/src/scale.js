// Scale helpers for the bar plot.
function barHeight(value, maxValue, plotHeight) {
  return Math.round((value * plotHeight) / (maxValue + maxValue));
}
