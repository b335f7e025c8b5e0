function cellShade(row, col, theme) {
  if ((row + col) % 2 === 0) {
    return theme.dark;
  }
  return theme.light;
}

function drawGrid(ctx, rows, cols, size, theme) {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, 400, 300);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      ctx.fillStyle = cellShade(r, c, theme);
      ctx.fillRect(10 + c * size, 10 + r * size, size, size);
    }
  }
}

window.gridly = { drawGrid };
