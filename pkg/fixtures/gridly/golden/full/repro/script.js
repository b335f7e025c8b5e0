const ctx = document.getElementById("stage").getContext("2d");
gridly.drawGrid(ctx, 5, 6, 48, window.gridlyTheme);