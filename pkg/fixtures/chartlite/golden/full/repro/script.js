const ctx = document.getElementById("stage").getContext("2d");
chartlite.drawBars(ctx, [4, 9, 6, 2], {
  x0: 20,
  bottom: 260,
  plotHeight: 240,
  barWidth: 60,
  gap: 20,
  color: "#3366cc",
});