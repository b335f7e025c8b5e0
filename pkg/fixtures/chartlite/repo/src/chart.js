function maxOf(values) {
  let max = 0;
  for (let i = 0; i < values.length; i++) {
    if (values[i] > max) {
      max = values[i];
    }
  }
  return max;
}

function drawBars(ctx, values, options) {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, 400, 300);
  const maxValue = maxOf(values);
  for (let i = 0; i < values.length; i++) {
    const h = barHeight(values[i], maxValue, options.plotHeight);
    const x = options.x0 + i * (options.barWidth + options.gap);
    ctx.fillStyle = options.color;
    ctx.fillRect(x, options.bottom - h, options.barWidth, h);
  }
}

window.chartlite = { drawBars };
